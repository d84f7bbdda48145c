#pragma once

#include <vector>

#include "evp/env_profile.hpp"
#include "evp/measure.hpp"
#include "evp/test_function.hpp"

namespace evp {

/// One application of the chain's transfer on measures: each atom (z, w)
/// splits into (z+alpha, w + log p(z)) and (z-alpha, w + log q(z)), followed
/// by compaction under the given policy. The result is normalized.
ParticleMeasure apply_markov(const ParticleMeasure& mu, const EnvProfile& env,
                             const RotationVector& alpha,
                             const CompactionPolicy& policy = CompactionPolicy{});

/// U^n phi(z) = sum_k P_z(xi_n = k) phi(z + k alpha), via the exact walk law.
double dual_apply(const TestFunction& phi, const EnvProfile& env, const RotationVector& alpha,
                  const TorusPoint& z, long long n);

struct WeightedSumResult {
    double log_total = 0.0; // log of sum_j exp(S_j f(z))
    double ratio = 0.0;     // weighted average of phi along the orbit
};

/// Weighted ergodic sums: S^w_n(phi,z) = sum_{j<n} e^{S_j f(z)} phi(z+j alpha),
/// accumulated in log domain, returning log S^w_n(1,z) and the ratio
/// S^w_n(phi,z)/S^w_n(1,z). |S_j f| up to ~1e4 is routine.
WeightedSumResult weighted_birkhoff(const TrigPoly& f, const RotationVector& alpha,
                                    const TestFunction& phi, const TorusPoint& z, long long n);

/// Relative defect of the multiplier-cocycle composition law
/// T^{n+m} phi(z) = T^n 1(z) * T^m phi(z + n alpha); exact zero when n or m is 0.
double t_semigroup_residual(const TrigPoly& f, const RotationVector& alpha,
                            const TestFunction& phi, const TorusPoint& z, long long n,
                            long long m);

/// Log-weight of the reversible invariant measure of the site-dependent walk,
/// pinned by detailed balance pi_{k+1}/pi_k = p_k / q_{k+1}, pi_0 = 1:
///   n > 0: sum_{j=0}^{n-1} log p(z+j a) - sum_{j=1}^{n} log q(z+j a)
///   n < 0: sum_{j=0}^{|n|-1} log q(z-j a) - sum_{j=1}^{|n|} log p(z-j a)
/// The exact 2n-step law's even-site ratios converge to ratios of these
/// weights (checked against the dynamic program in the tests).
double rho_log(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z,
               long long n);

/// |q(z+a) h(z) + p(z-a) h^{-1}(z-a) - 1| with h = p / (q o R_alpha);
/// an algebraic identity, so ~1e-16 for every z.
double pf_unit_residual(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z);

/// max over test functions phi of |∫ phi d(R_{-alpha}* mu) - ∫ phi e^f d mu|
/// evaluated on atoms; zero exactly when mu solves the quasi-invariance
/// equation for h = e^f.
double quasi_invariance_residual(const ParticleMeasure& mu, const TrigPoly& f,
                                 const RotationVector& alpha,
                                 const std::vector<TestFunction>& tests);

} // namespace evp
