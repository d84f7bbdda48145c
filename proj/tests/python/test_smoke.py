"""Smoke tests for the evplab extension against hand-computable values."""

import json
import math

import pytest

import evplab as e

ZERO = {"d": 1, "terms": []}
SIN1 = {"d": 1, "terms": [{"k": [1], "cos": 0.0, "sin": 0.3}]}
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def test_rotate_and_eval():
    assert e.rotate_k([0.25], ["1/2"], 3) == pytest.approx([0.75], abs=1e-15)
    assert e.rotate_k([0.1, 0.2], [0.3, 0.4], 0) == [0.1, 0.2]
    seed = {"d": 2, "terms": [{"k": [0, 2], "cos": 0.0, "sin": -1.0}]}
    assert e.trig_eval(seed, [0.7, 0.125]) == pytest.approx(-1.0, abs=1e-14)


def test_binomial_walk_law():
    pmf = e.walk_pmf_exact(ZERO, [0.3], [0.0], 4)
    assert pmf[0] == 0.375
    assert sum(pmf.values()) == pytest.approx(1.0, abs=1e-12)
    assert set(pmf) == {-4, -2, 0, 2, 4}


def test_walk_sample_matches_law():
    hist = e.walk_sample(ZERO, [0.37], [0.0], 4, 50000, seed=3)
    assert hist[0] == pytest.approx(0.375, abs=0.01)
    assert hist == e.walk_sample(ZERO, [0.37], [0.0], 4, 50000, seed=3)


def test_sine_sum_against_brute_force():
    q, alpha, t, n = 3, 0.2137, 0.41, 200
    brute = sum(math.sin(2 * math.pi * q * (t + j * alpha)) for j in range(n))
    assert e.sine_sum_closed_form(q, alpha, t, n) == pytest.approx(brute, abs=1e-9)
    with pytest.raises(e.EvpError):
        e.zeta_r(2, 0.5)


def test_xi_map_round_trip():
    env = e.xi_map(SIN1)
    for z in (0.0, 0.1, 0.37, 0.9):
        p, q = env.p([z]), env.q([z])
        assert 0.0 < p < 1.0
        assert p + q == pytest.approx(1.0, abs=1e-15)
        assert math.log(p / q) == pytest.approx(env.f([z]), abs=1e-12)
    assert env.symmetry_defect == 0.0


def test_weighted_birkhoff_and_dual():
    log_total, ratio = e.weighted_birkhoff(ZERO, [GOLDEN], "one", [0.2], 50)
    assert ratio == 1.0
    assert log_total == pytest.approx(math.log(50.0), abs=1e-12)
    assert e.dual_apply("one", SIN1, [GOLDEN], [0.3], 7) == pytest.approx(1.0, abs=1e-13)
    assert e.pf_unit_residual(SIN1, [GOLDEN], [0.3]) < 1e-12


def test_rho_log_reversibility():
    env = e.xi_map(SIN1)
    z = [0.1]
    # detailed balance step: rho_{k+1} = rho_k * p_k / q_{k+1}
    p0 = env.p(z)
    z1 = e.rotate_k(z, [GOLDEN], 1)
    q1 = env.q(z1)
    assert e.rho_log(SIN1, [GOLDEN], z, 1) == pytest.approx(
        math.log(p0) - math.log(q1), abs=1e-12
    )


def test_measure_json_round_trip():
    mu = e.ParticleMeasure.dirac([0.25])
    out = e.apply_markov(mu, ZERO, [0.3], compaction=False)
    blob = json.loads(out.to_json())
    assert blob["d"] == 1
    assert len(blob["atoms"]) == 2
    back = e.ParticleMeasure.from_json(out.to_json())
    assert back.point(0) == out.point(0)


def test_stage0_and_search():
    bundle = e.init_stage0([0.05, 0.02, 0.008])
    assert bundle.stage_count == 1
    summary = bundle.stage_summary(0)
    assert summary["q"] == "1"
    assert summary["a"] == "2"
    diag = e.advance_stage(bundle, 0.05, work_budget=50_000_000)
    assert diag["found"]
    assert bundle.stage_count == 2
    s1 = bundle.stage_summary(1)
    assert s1["min_plus"] > 0.95
    assert s1["max_minus"] < 0.05
    assert s1["separation"] > 0.9
    report = json.loads(e.verify_stage(bundle, 1))
    assert report["pass_goal"]
