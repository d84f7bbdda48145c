#include "evp/operators.hpp"

#include <cmath>

#include "evp/birkhoff.hpp"
#include "evp/walk.hpp"

namespace evp {

ParticleMeasure apply_markov(const ParticleMeasure& mu, const EnvProfile& env,
                             const RotationVector& alpha, const CompactionPolicy& policy) {
    if (mu.empty()) throw Error("apply_markov: empty measure");
    if (mu.dim() != env.dim() || mu.dim() != alpha.dim())
        throw DimensionMismatch("apply_markov: dimension mismatch");
    ParticleMeasure out(mu.dim());
    std::vector<double> fwd = alpha.frac_multiple(1);
    std::vector<double> bwd = alpha.frac_multiple(-1);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        TorusPoint z = mu.point(i);
        double lw = mu.logw(i);
        std::vector<double> zp(z.c), zm(z.c);
        for (int k = 0; k < mu.dim(); ++k) {
            zp[static_cast<std::size_t>(k)] = fracd(zp[static_cast<std::size_t>(k)] + fwd[static_cast<std::size_t>(k)]);
            zm[static_cast<std::size_t>(k)] = fracd(zm[static_cast<std::size_t>(k)] + bwd[static_cast<std::size_t>(k)]);
        }
        out.push_back(TorusPoint(std::move(zp)), lw + env.log_p(z));
        out.push_back(TorusPoint(std::move(zm)), lw + env.log_q(z));
    }
    if (policy.enabled)
        out.compact(policy.merge_radius, policy.cap);
    else
        out.normalize();
    return out;
}

double dual_apply(const TestFunction& phi, const EnvProfile& env, const RotationVector& alpha,
                  const TorusPoint& z, long long n) {
    if (n < 1) throw Error("dual_apply: n must be >= 1");
    WalkPMF pmf = walk_pmf_exact(env, alpha, z, n);
    OrbitCursor orbit(z, alpha);
    double s = 0.0;
    for (long long k = -n; k <= n; ++k) {
        double w = pmf.prob(k);
        if (w != 0.0) s += w * phi.eval(orbit.at(k));
    }
    return s;
}

WeightedSumResult weighted_birkhoff(const TrigPoly& f, const RotationVector& alpha,
                                    const TestFunction& phi, const TorusPoint& z, long long n) {
    if (n < 1) throw Error("weighted_birkhoff: n must be >= 1");
    OrbitCursor orbit(z, alpha);
    LogWeightedMeanAcc acc;
    double s = 0.0; // running S_j f(z)
    for (long long j = 0; j < n; ++j) {
        TorusPoint zj = orbit.at(j);
        acc.add(s, phi.eval(zj));
        s += f.eval(zj);
    }
    return {acc.log_total(), acc.mean()};
}

double t_semigroup_residual(const TrigPoly& f, const RotationVector& alpha,
                            const TestFunction& phi, const TorusPoint& z, long long n,
                            long long m) {
    if (n < 0 || m < 0) throw Error("t_semigroup_residual: n, m must be >= 0");
    // Both sides share the factor phi(z+(n+m)alpha); in log domain the defect
    // reduces to |1 - exp(D)| with D the mismatch of the two S-sum routes.
    if (phi.eval(rotate_k(z, alpha, n + m)) == 0.0) return 0.0;
    double lhs_log = birkhoff_sum(f, alpha, z, n + m);
    double rhs_log = birkhoff_sum(f, alpha, z, n) +
                     birkhoff_sum(f, alpha, rotate_k(z, alpha, n), m);
    return std::abs(std::expm1(rhs_log - lhs_log));
}

double rho_log(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z,
               long long n) {
    if (n == 0) return 0.0;
    OrbitCursor orbit(z, alpha);
    double s = 0.0;
    if (n > 0) {
        for (long long j = 0; j < n; ++j) s += env.log_p(orbit.at(j));
        for (long long j = 1; j <= n; ++j) s -= env.log_q(orbit.at(j));
    } else {
        long long m = -n;
        for (long long j = 0; j < m; ++j) s += env.log_q(orbit.at(-j));
        for (long long j = 1; j <= m; ++j) s -= env.log_p(orbit.at(-j));
    }
    return s;
}

double pf_unit_residual(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z) {
    TorusPoint zf = rotate_k(z, alpha, 1);
    TorusPoint zb = rotate_k(z, alpha, -1);
    double h_z = env.p(z) / env.q(zf);
    double h_zb = env.p(zb) / env.q(z); // q(R_alpha R_{-alpha} z) = q(z)
    return std::abs(env.q(zf) * h_z + env.p(zb) / h_zb - 1.0);
}

double quasi_invariance_residual(const ParticleMeasure& mu, const TrigPoly& f,
                                 const RotationVector& alpha,
                                 const std::vector<TestFunction>& tests) {
    if (mu.empty()) throw Error("quasi_invariance_residual: empty measure");
    if (tests.empty()) throw Error("quasi_invariance_residual: empty test list");
    std::vector<double> bwd = alpha.frac_multiple(-1);
    double worst = 0.0;
    for (const TestFunction& phi : tests) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            TorusPoint z = mu.point(i);
            double w = std::exp(mu.logw(i));
            std::vector<double> zm(z.c);
            for (int k = 0; k < mu.dim(); ++k)
                zm[static_cast<std::size_t>(k)] = fracd(zm[static_cast<std::size_t>(k)] + bwd[static_cast<std::size_t>(k)]);
            lhs += w * phi.eval(TorusPoint(std::move(zm)));
            rhs += w * std::exp(f.eval(z)) * phi.eval(z);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

} // namespace evp
