#include "evp/walk.hpp"

#include <algorithm>
#include <cmath>

#include "evp/operators.hpp"

namespace evp {

double WalkPMF::total() const {
    double s = 0.0;
    for (double v : probs_) s += v;
    return s;
}

void EnvCache::ensure(long long j) const {
    if (lo_ <= hi_ && j >= lo_ && j <= hi_) return;
    long long nlo = lo_ <= hi_ ? std::min(lo_, j) : std::min<long long>(j, 0);
    long long nhi = lo_ <= hi_ ? std::max(hi_, j) : std::max<long long>(j, 0);
    // Grow geometrically to keep amortized cost linear.
    nlo = std::min(nlo, -(std::abs(j) + 1));
    nhi = std::max(nhi, std::abs(j) + 1);
    std::vector<double> np(static_cast<std::size_t>(nhi - nlo + 1));
    for (long long k = nlo; k <= nhi; ++k) {
        if (lo_ <= hi_ && k >= lo_ && k <= hi_)
            np[static_cast<std::size_t>(k - nlo)] = p_by_offset_[static_cast<std::size_t>(k - lo_)];
        else
            np[static_cast<std::size_t>(k - nlo)] = env_.p(orbit_.at(k));
    }
    p_by_offset_ = std::move(np);
    lo_ = nlo;
    hi_ = nhi;
}

namespace {

/// Shared DP core; calls sink(m, law) after computing the m-step law.
template <typename Sink>
void dp_sweep(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z,
              long long n_max, Sink&& sink) {
    EnvCache cache(env, alpha, z);
    std::vector<double> law(static_cast<std::size_t>(2 * n_max + 1), 0.0);
    std::vector<double> next(law.size(), 0.0);
    const long long c = n_max; // index of offset 0
    law[static_cast<std::size_t>(c)] = 1.0;
    long long underflow = 0;
    sink(0, law, underflow);
    for (long long m = 1; m <= n_max; ++m) {
        std::fill(next.begin(), next.end(), 0.0);
        for (long long k = -m; k <= m; ++k) {
            double up = 0.0, down = 0.0;
            double wl = (k - 1 >= -n_max) ? law[static_cast<std::size_t>(c + k - 1)] : 0.0;
            double wr = (k + 1 <= n_max) ? law[static_cast<std::size_t>(c + k + 1)] : 0.0;
            if (wl > 0.0) up = wl * cache.p(k - 1);
            if (wr > 0.0) down = wr * cache.q(k + 1);
            double v = up + down;
            if (v == 0.0 && (wl > 0.0 || wr > 0.0)) ++underflow;
            next[static_cast<std::size_t>(c + k)] = v;
        }
        law.swap(next);
        sink(m, law, underflow);
    }
}

} // namespace

WalkPMF walk_pmf_exact(const EnvProfile& env, const RotationVector& alpha, const TorusPoint& z,
                       long long n) {
    if (n < 0) throw Error("walk_pmf_exact: n must be >= 0");
    WalkPMF out(n);
    dp_sweep(env, alpha, z, n,
             [&](long long m, const std::vector<double>& law, long long underflow) {
                 if (m != n) return;
                 for (long long k = -n; k <= n; ++k)
                     out.cell(k) = law[static_cast<std::size_t>(n + k)];
                 out.underflow_count = underflow;
             });
    return out;
}

std::vector<WalkPMF> walk_pmf_series(const EnvProfile& env, const RotationVector& alpha,
                                     const TorusPoint& z, const std::vector<long long>& n_list) {
    if (n_list.empty()) return {};
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw Error("walk_pmf_series: n_list must be sorted ascending");
    std::vector<WalkPMF> out;
    out.reserve(n_list.size());
    long long n_max = n_list.back();
    std::size_t next_idx = 0;
    dp_sweep(env, alpha, z, n_max,
             [&](long long m, const std::vector<double>& law, long long underflow) {
                 while (next_idx < n_list.size() && n_list[next_idx] == m) {
                     WalkPMF pmf(m);
                     for (long long k = -m; k <= m; ++k)
                         pmf.cell(k) = law[static_cast<std::size_t>(n_max + k)];
                     pmf.underflow_count = underflow;
                     out.push_back(std::move(pmf));
                     ++next_idx;
                 }
             });
    if (next_idx != n_list.size()) throw Error("walk_pmf_series: invalid n_list entry");
    return out;
}

EndpointHistogram walk_sample(const EnvProfile& env, const RotationVector& alpha,
                              const TorusPoint& z, long long n, long long m, RngSpec rng,
                              long long capture_trajectories) {
    if (m < 1) throw Error("walk_sample: need m >= 1 samples");
    EnvCache cache(env, alpha, z);
    EndpointHistogram hist;
    hist.n = n;
    hist.samples = m;
    hist.counts.assign(static_cast<std::size_t>(2 * n + 1), 0);
    for (long long i = 0; i < m; ++i) {
        RngStream stream(rng.seed, rng.stream + static_cast<std::uint64_t>(i));
        long long xi = 0;
        Trajectory traj;
        bool keep = i < capture_trajectories;
        if (keep) {
            traj.start = z;
            traj.steps.reserve(static_cast<std::size_t>(n));
        }
        for (long long step = 0; step < n; ++step) {
            bool up = stream.bernoulli(cache.p(xi));
            xi += up ? 1 : -1;
            if (keep) traj.steps.push_back(up ? 1 : -1);
        }
        ++hist.counts[static_cast<std::size_t>(xi + n)];
        if (keep) hist.captured.push_back(std::move(traj));
    }
    return hist;
}

ChainSample evp_chain_sample(const EnvProfile& env, const RotationVector& alpha,
                             const TorusPoint& z, long long n_steps, RngSpec rng) {
    if (n_steps < 1) throw Error("evp_chain_sample: need at least one step");
    EnvCache cache(env, alpha, z);
    RngStream stream(rng);
    ChainSample out;
    out.points.reserve(static_cast<std::size_t>(n_steps + 1));
    out.xi.reserve(static_cast<std::size_t>(n_steps + 1));
    long long xi = 0;
    out.points.push_back(cache.point(0));
    out.xi.push_back(0);
    for (long long j = 0; j < n_steps; ++j) {
        xi += stream.bernoulli(cache.p(xi)) ? 1 : -1;
        out.points.push_back(cache.point(xi));
        out.xi.push_back(xi);
    }
    return out;
}

std::vector<RatioLimitRow> ratio_limit_report(const EnvProfile& env, const RotationVector& alpha,
                                              const TorusPoint& z, long long a, long long b,
                                              const std::vector<long long>& n_list) {
    if (std::abs(env.symmetry_defect()) >= 1e-9)
        throw Error("ratio_limit_report: environment is not symmetric");
    std::vector<long long> steps;
    steps.reserve(n_list.size());
    for (long long n : n_list) {
        if (n < 1) throw Error("ratio_limit_report: n must be >= 1");
        if (std::abs(2 * a) > 2 * n || std::abs(2 * b) > 2 * n)
            throw Error("ratio_limit_report: 2a, 2b must be within reachable support");
        steps.push_back(2 * n);
    }
    std::vector<long long> sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    auto pmfs = walk_pmf_series(env, alpha, z, sorted);

    double rhs = std::exp(rho_log(env, alpha, z, 2 * a) - rho_log(env, alpha, z, 2 * b));
    std::vector<RatioLimitRow> rows;
    rows.reserve(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), steps[i]);
        const WalkPMF& pmf = pmfs[static_cast<std::size_t>(it - sorted.begin())];
        double den = pmf.prob(2 * b);
        if (den <= 0.0) throw Error("ratio_limit_report: zero probability at the denominator");
        rows.push_back({n_list[i], pmf.prob(2 * a) / den, rhs});
    }
    return rows;
}

RecordFrequency record_frequency_estimate(const EnvProfile& env, const RotationVector& alpha,
                                          const ParticleMeasure& mu, long long n, long long m,
                                          RngSpec rng) {
    if (m < 1) throw Error("record_frequency_estimate: need m >= 1 samples");
    if (mu.empty()) throw Error("record_frequency_estimate: empty start measure");
    // CDF over atoms for start-point draws.
    std::vector<double> cdf(mu.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        acc += std::exp(mu.logw(i));
        cdf[i] = acc;
    }
    long long hits = 0;
    for (long long i = 0; i < m; ++i) {
        RngStream stream(rng.seed, rng.stream + static_cast<std::uint64_t>(i));
        double u = stream.next_double() * acc;
        std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= mu.size()) idx = mu.size() - 1;
        EnvCache cache(env, alpha, mu.point(idx));
        long long xi = 0, running_max = 0;
        for (long long step = 0; step < n; ++step) {
            if (step > 0) running_max = std::max(running_max, xi);
            xi += stream.bernoulli(cache.p(xi)) ? 1 : -1;
        }
        // record event: xi_n strictly above max over xi_0..xi_{n-1}
        if (xi > running_max) ++hits;
    }
    RecordFrequency out;
    out.samples = m;
    out.estimate = static_cast<double>(hits) / static_cast<double>(m);
    out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(m));
    return out;
}

} // namespace evp
