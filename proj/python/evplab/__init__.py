"""Random walks in quasi-periodic environments on the torus.

Exact walk laws, the environment-viewed-by-the-particle chain, weighted
ergodic sums, stationarity/mixing diagnostics, and the staged construction
of analytic environments whose chain has more than one ergodic stationary
measure. The heavy lifting lives in the C++ extension ``evplab._core``.
"""

from ._core import (  # noqa: F401
    EnvProfile,
    EvpError,
    FourierFingerprint,
    ParticleMeasure,
    StageBundle,
    TrigPoly,
    __version__,
    advance_stage,
    apply_markov,
    atom_partial_sums,
    birkhoff_sum,
    dual_apply,
    init_stage0,
    mixing_correlation,
    pf_unit_residual,
    quasi_invariance_residual,
    record_frequency_estimate,
    rho_log,
    rotate_k,
    sine_sum_closed_form,
    stationary_estimate,
    symmetry_defect,
    t_semigroup_residual,
    trig_eval,
    verify_stage,
    walk_pmf_exact,
    walk_sample,
    weak_star_distance,
    weighted_birkhoff,
    xi_map,
    zeta_r,
)
