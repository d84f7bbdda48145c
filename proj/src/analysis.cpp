#include "evp/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "evp/birkhoff.hpp"

namespace evp {

namespace {

void enumerate_freqs(int d, int cutoff, std::vector<int>& cur,
                     std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == d) {
        out.push_back(cur);
        return;
    }
    int used = 0;
    for (int v : cur) used += std::abs(v);
    for (int v = -(cutoff - used); v <= cutoff - used; ++v) {
        cur.push_back(v);
        enumerate_freqs(d, cutoff, cur, out);
        cur.pop_back();
    }
}

} // namespace

FourierFingerprint FourierFingerprint::of_measure(const ParticleMeasure& mu, int cutoff) {
    if (mu.empty()) throw Error("fingerprint: empty measure");
    FourierFingerprint fp(mu.dim(), cutoff);
    std::vector<std::vector<int>> freqs;
    std::vector<int> cur;
    enumerate_freqs(mu.dim(), cutoff, cur, freqs);
    std::vector<double> w(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) w[i] = std::exp(mu.logw(i));
    for (const auto& k : freqs) {
        std::complex<double> c(0.0, 0.0);
        for (std::size_t i = 0; i < mu.size(); ++i) {
            double phase = 0.0;
            for (int j = 0; j < mu.dim(); ++j)
                phase += static_cast<double>(k[static_cast<std::size_t>(j)]) * mu.coord(i, j);
            double th = 2.0 * M_PI * phase;
            c += w[i] * std::complex<double>(std::cos(th), std::sin(th));
        }
        fp.coeffs_[k] = c;
    }
    return fp;
}

std::complex<double> FourierFingerprint::coeff(const std::vector<int>& k) const {
    auto it = coeffs_.find(k);
    if (it == coeffs_.end()) throw Error("fingerprint: frequency outside the cutoff");
    return it->second;
}

nlohmann::json FourierFingerprint::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [k, c] : coeffs_) arr.push_back({{"k", k}, {"re", c.real()}, {"im", c.imag()}});
    return nlohmann::json{{"d", d_}, {"cutoff", cutoff_}, {"coeffs", arr}};
}

double weak_star_distance(const FourierFingerprint& A, const FourierFingerprint& B) {
    if (A.cutoff() != B.cutoff() || A.dim() != B.dim())
        throw Error("weak_star_distance: cutoff mismatch");
    double worst = 0.0;
    for (const auto& [k, ca] : A.coeffs()) worst = std::max(worst, std::abs(ca - B.coeff(k)));
    return worst;
}

ParticleMeasure stationary_estimate(const EnvProfile& env, const RotationVector& alpha,
                                    const TorusPoint& z0, long long burnin, long long length,
                                    RngSpec rng) {
    if (length < 1) throw Error("stationary_estimate: length must be >= 1");
    if (burnin < 0) throw Error("stationary_estimate: burnin must be >= 0");
    EnvCache cache(env, alpha, z0);
    RngStream stream(rng);
    ParticleMeasure mu(env.dim());
    long long xi = 0;
    double lw = -std::log(static_cast<double>(length));
    for (long long j = 0; j < burnin + length; ++j) {
        if (j >= burnin) mu.push_back(cache.point(xi), lw);
        xi += stream.bernoulli(cache.p(xi)) ? 1 : -1;
    }
    mu.normalize();
    return mu;
}

CorrelationSeries mixing_correlation(const EnvProfile& env, const RotationVector& alpha,
                                     const ParticleMeasure& mu, const TestFunction& phi,
                                     const TestFunction& psi, const std::vector<long long>& n_list,
                                     RngSpec rng, long long mc_samples) {
    if (mu.empty()) throw Error("mixing_correlation: empty measure");
    std::vector<long long> exact_ns, mc_ns;
    for (long long n : n_list) {
        if (n < 0) throw Error("mixing_correlation: n must be >= 0");
        (n <= kMixingExactLimit ? exact_ns : mc_ns).push_back(n);
    }
    std::sort(exact_ns.begin(), exact_ns.end());
    exact_ns.erase(std::unique(exact_ns.begin(), exact_ns.end()), exact_ns.end());

    double mean_phi = mu.integrate(phi);
    double mean_psi = mu.integrate(psi);
    std::map<long long, double> value;     // sum over atoms of w * psi(z) * U^n phi(z)
    std::map<long long, double> variance;  // MC variance accumulator

    for (std::size_t i = 0; i < mu.size(); ++i) {
        TorusPoint z = mu.point(i);
        double w = std::exp(mu.logw(i));
        double psi_z = psi.eval(z);
        if (!exact_ns.empty()) {
            long long n_max = exact_ns.back();
            OrbitCursor orbit(z, alpha);
            std::vector<double> phi_at(static_cast<std::size_t>(2 * n_max + 1));
            for (long long k = -n_max; k <= n_max; ++k)
                phi_at[static_cast<std::size_t>(k + n_max)] = phi.eval(orbit.at(k));
            auto pmfs = walk_pmf_series(env, alpha, z, exact_ns);
            for (std::size_t t = 0; t < exact_ns.size(); ++t) {
                long long n = exact_ns[t];
                double u = 0.0;
                for (long long k = -n; k <= n; ++k) {
                    double p = pmfs[t].prob(k);
                    if (p != 0.0) u += p * phi_at[static_cast<std::size_t>(k + n_max)];
                }
                value[n] += w * psi_z * u;
            }
        }
        for (long long n : mc_ns) {
            // Estimate U^n phi(z) by sampling endpoints.
            EnvCache cache(env, alpha, z);
            double acc = 0.0, acc2 = 0.0;
            for (long long s = 0; s < mc_samples; ++s) {
                RngStream stream(rng.seed,
                                 rng.stream + static_cast<std::uint64_t>(i * 1315423911ULL +
                                                                          static_cast<std::uint64_t>(s)));
                long long xi = 0;
                for (long long step = 0; step < n; ++step)
                    xi += stream.bernoulli(cache.p(xi)) ? 1 : -1;
                double v = phi.eval(cache.point(xi));
                acc += v;
                acc2 += v * v;
            }
            double m = acc / static_cast<double>(mc_samples);
            double var = std::max(0.0, acc2 / static_cast<double>(mc_samples) - m * m);
            value[n] += w * psi_z * m;
            variance[n] += w * w * psi_z * psi_z * var / static_cast<double>(mc_samples);
        }
    }

    CorrelationSeries series;
    for (long long n : n_list) {
        CorrelationRow row;
        row.n = n;
        row.value = value[n] - mean_phi * mean_psi;
        row.stderr_ = variance.count(n) ? std::sqrt(variance[n]) : 0.0;
        series.push_back(row);
    }
    return series;
}

std::vector<AtomSumRow> atom_partial_sums(const TrigPoly& f, const RotationVector& alpha,
                                          const TorusPoint& z0, long long N) {
    if (N < 1) throw Error("atom_partial_sums: N must be >= 1");
    OrbitCursor orbit(z0, alpha);
    LogSumAcc acc;
    acc.add(0.0); // j = 0 term
    double s_fwd = 0.0, s_bwd = 0.0;
    std::vector<AtomSumRow> rows;
    rows.reserve(static_cast<std::size_t>(N));
    for (long long n = 1; n <= N; ++n) {
        s_fwd += f.eval(orbit.at(n - 1)); // S_n = S_{n-1} + f(z + (n-1)a)
        s_bwd += f.eval(orbit.at(-n));    // S_{-n} = S_{-(n-1)} + f(z - n a)
        acc.add(s_fwd);
        acc.add(s_bwd);
        rows.push_back({n, acc.value()});
    }
    return rows;
}

UniformityScan ratio_uniformity_scan(const TrigPoly& f, const RotationVector& alpha,
                                     const TestFunction& phi,
                                     const std::vector<TorusPoint>& points, long long n) {
    if (n < 1) throw Error("ratio_uniformity_scan: n must be >= 1");
    if (points.empty()) throw Error("ratio_uniformity_scan: no grid points");
    UniformityScan out;
    bool first = true;
    for (const TorusPoint& z : points) {
        double ratio = weighted_birkhoff(f, alpha, phi, z, n).ratio;
        if (first || ratio < out.min_ratio) {
            out.min_ratio = ratio;
            out.argmin = z;
        }
        if (first || ratio > out.max_ratio) {
            out.max_ratio = ratio;
            out.argmax = z;
        }
        first = false;
    }
    return out;
}

} // namespace evp
