#pragma once

#include <complex>
#include <map>

#include <json.hpp>

#include "evp/operators.hpp"
#include "evp/walk.hpp"

namespace evp {

/// Finite vector of measure characters ∫ e^{2 pi i k.z} dmu for |k|_1 <= K;
/// a computable proxy for the weak-* topology. coeff(0) = 1 for probability
/// measures and coeff(-k) is the conjugate of coeff(k).
class FourierFingerprint {
public:
    FourierFingerprint(int d, int cutoff) : d_(d), cutoff_(cutoff) {}

    static FourierFingerprint of_measure(const ParticleMeasure& mu, int cutoff);

    int dim() const { return d_; }
    int cutoff() const { return cutoff_; }
    const std::map<std::vector<int>, std::complex<double>>& coeffs() const { return coeffs_; }
    std::complex<double> coeff(const std::vector<int>& k) const;

    nlohmann::json to_json() const;

private:
    int d_;
    int cutoff_;
    std::map<std::vector<int>, std::complex<double>> coeffs_;
};

/// max_k |A(k) - B(k)|; requires equal cutoffs.
double weak_star_distance(const FourierFingerprint& A, const FourierFingerprint& B);

/// Occupation measure of the chain after burn-in: the last `length` visited
/// points as equal-weight atoms.
ParticleMeasure stationary_estimate(const EnvProfile& env, const RotationVector& alpha,
                                    const TorusPoint& z0, long long burnin, long long length,
                                    RngSpec rng);

struct CorrelationRow {
    long long n = 0;
    double value = 0.0;
    double stderr_ = 0.0; // 0 for the exact path
};
using CorrelationSeries = std::vector<CorrelationRow>;

inline constexpr long long kMixingExactLimit = 2048;

/// Correlation ∫ U^n phi . psi dmu - ∫ phi dmu ∫ psi dmu for each n in n_list
/// (n = 0 allowed). Exact dynamic programming per atom up to n <= 2048;
/// beyond that a Monte Carlo estimate with mc_samples per atom and a reported
/// standard error.
CorrelationSeries mixing_correlation(const EnvProfile& env, const RotationVector& alpha,
                                     const ParticleMeasure& mu, const TestFunction& phi,
                                     const TestFunction& psi, const std::vector<long long>& n_list,
                                     RngSpec rng = RngSpec{}, long long mc_samples = 4096);

struct AtomSumRow {
    long long n = 0;
    double log_sum = 0.0; // log sum_{|j| <= n} exp(S_j f(z0))
};

/// Log partial sums of the atom criterion over symmetric windows; unbounded
/// growth is what rules out atoms. The series is the deliverable.
std::vector<AtomSumRow> atom_partial_sums(const TrigPoly& f, const RotationVector& alpha,
                                          const TorusPoint& z0, long long N);

struct UniformityScan {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    TorusPoint argmin;
    TorusPoint argmax;
    double spread() const { return max_ratio - min_ratio; }
};

/// Weighted ergodic ratios over an explicit set of start points; the spread
/// max - min is the uniformity diagnostic.
UniformityScan ratio_uniformity_scan(const TrigPoly& f, const RotationVector& alpha,
                                     const TestFunction& phi,
                                     const std::vector<TorusPoint>& points, long long n);

} // namespace evp
