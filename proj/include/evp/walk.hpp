#pragma once

#include <cstdint>
#include <vector>

#include "evp/env_profile.hpp"
#include "evp/measure.hpp"
#include "evp/rng.hpp"

namespace evp {

/// Exact law of the walk position after n steps. Support is [-n, n], entries
/// of odd parity relative to n are zero, and the mass sums to 1.
class WalkPMF {
public:
    explicit WalkPMF(long long n)
        : n_(n), probs_(static_cast<std::size_t>(2 * n + 1), 0.0) {}

    long long steps() const { return n_; }
    double prob(long long offset) const {
        if (offset < -n_ || offset > n_) return 0.0;
        return probs_[static_cast<std::size_t>(offset + n_)];
    }
    double& cell(long long offset) { return probs_[static_cast<std::size_t>(offset + n_)]; }
    double total() const;

    /// Cells that rounded to zero while a parent carried mass.
    long long underflow_count = 0;

private:
    long long n_;
    std::vector<double> probs_;
};

/// One sampled walk: start point and the +-1 increments.
struct Trajectory {
    TorusPoint start;
    std::vector<signed char> steps;

    std::vector<long long> positions() const {
        std::vector<long long> xi(steps.size() + 1, 0);
        for (std::size_t j = 0; j < steps.size(); ++j) xi[j + 1] = xi[j] + steps[j];
        return xi;
    }
};

struct EndpointHistogram {
    long long n = 0;
    long long samples = 0;
    std::vector<long long> counts; // offset k at index k + n
    std::vector<Trajectory> captured;

    double freq(long long offset) const {
        if (offset < -n || offset > n) return 0.0;
        return static_cast<double>(counts[static_cast<std::size_t>(offset + n)]) /
               static_cast<double>(samples);
    }
};

/// Environment values p_j = p(z + j alpha) cached per offset; the positions
/// come from the exact rational j*alpha mod 1 when the angle carries one.
class EnvCache {
public:
    EnvCache(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z)
        : env_(env), orbit_(z, alpha) {}

    double p(long long j) const {
        ensure(j);
        return p_by_offset_[static_cast<std::size_t>(j - lo_)];
    }
    double q(long long j) const { return 1.0 - p(j); }
    TorusPoint point(long long j) const { return orbit_.at(j); }

private:
    void ensure(long long j) const;

    const EnvProfile& env_;
    OrbitCursor orbit_;
    mutable long long lo_ = 0, hi_ = -1; // cached range [lo_, hi_]
    mutable std::vector<double> p_by_offset_;
};

/// Exact n-step law by dynamic programming over (step, offset); O(n^2).
WalkPMF walk_pmf_exact(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z,
                       long long n);

/// Laws at several step counts in one DP sweep (n_list sorted ascending).
std::vector<WalkPMF> walk_pmf_series(const EnvProfile& env, const RotationVector& alpha,
                                     const TorusPoint& z, const std::vector<long long>& n_list);

/// m independent quenched trajectories; trajectory i uses rng stream
/// (spec.stream + i). Deterministic for a fixed RngSpec.
EndpointHistogram walk_sample(const EnvProfile& env, const RotationVector& alpha,
                              const TorusPoint& z, long long n, long long m, RngSpec rng,
                              long long capture_trajectories = 0);

/// EVP chain realization z_0 = z, z_{j+1} = z_j +- alpha; returns the visited
/// points. The coupled walk offsets are exposed so z_j = z + xi_j alpha holds
/// exactly by construction.
struct ChainSample {
    std::vector<TorusPoint> points;
    std::vector<long long> xi;
};
ChainSample evp_chain_sample(const EnvProfile& env, const RotationVector& alpha,
                             const TorusPoint& z, long long n_steps, RngSpec rng);

struct RatioLimitRow {
    long long n = 0;
    double lhs = 0.0; // P_z(xi_{2n}=2a) / P_z(xi_{2n}=2b)
    double rhs = 0.0; // rho_{2a}(z) / rho_{2b}(z)
};

/// Exact-law ratio against the invariant-weight prediction, for each n in
/// n_list. Requires a symmetric environment. No convergence is enforced;
/// the series itself is the deliverable.
std::vector<RatioLimitRow> ratio_limit_report(const EnvProfile& env, const RotationVector& alpha,
                                              const TorusPoint& z, long long a, long long b,
                                              const std::vector<long long>& n_list);

struct RecordFrequency {
    double estimate = 0.0;
    double stderr_ = 0.0;
    long long samples = 0;
};

/// Monte Carlo estimate of P_mu(max_{j<=n-1} xi_j < xi_n), start points drawn
/// from mu (annealed start). Stream i drives trajectory i.
RecordFrequency record_frequency_estimate(const EnvProfile& env, const RotationVector& alpha,
                                          const ParticleMeasure& mu, long long n, long long m,
                                          RngSpec rng);

} // namespace evp
