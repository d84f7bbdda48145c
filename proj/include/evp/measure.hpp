#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "evp/numeric.hpp"
#include "evp/test_function.hpp"
#include "evp/torus.hpp"

namespace evp {

/// How apply_markov bounds the atom count: merge atoms closer than
/// merge_radius (sup metric per coordinate), then keep the cap heaviest and
/// renormalize. Disabled inside exact duality checks.
struct CompactionPolicy {
    bool enabled = true;
    double merge_radius = 1e-6;
    std::size_t cap = 1u << 16;

    static CompactionPolicy off() { return {false, 0.0, 0}; }
};

/// Borel probability measure represented by weighted atoms (log-domain
/// weights). After every public operation the log-sum-exp of the weights is 0.
class ParticleMeasure {
public:
    explicit ParticleMeasure(int d) : d_(d) {}

    static ParticleMeasure dirac(const TorusPoint& z) {
        ParticleMeasure mu(z.dim());
        mu.push_back(z, 0.0);
        return mu;
    }

    /// Uniform grid of n^d atoms (d=1: i/n; d=2: tensor grid), equal weights.
    static ParticleMeasure uniform_grid(int d, std::size_t n);

    /// Equal-weight atoms at the given points.
    static ParticleMeasure from_points(int d, const std::vector<TorusPoint>& pts);

    /// Atoms at grid points i/n with weights proportional to exp(logdens(z)).
    static ParticleMeasure weighted_grid(std::size_t n,
                                         const std::function<double(double)>& logdens);

    int dim() const { return d_; }
    std::size_t size() const { return logw_.size(); }
    bool empty() const { return logw_.empty(); }

    TorusPoint point(std::size_t i) const {
        std::vector<double> c(coords_.begin() + static_cast<std::ptrdiff_t>(i) * d_,
                              coords_.begin() + static_cast<std::ptrdiff_t>(i + 1) * d_);
        return TorusPoint(std::move(c));
    }
    double coord(std::size_t i, int k) const { return coords_[i * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]; }
    double logw(std::size_t i) const { return logw_[i]; }

    void push_back(const TorusPoint& z, double logweight) {
        if (z.dim() != d_) throw DimensionMismatch("measure atom dim mismatch");
        coords_.insert(coords_.end(), z.c.begin(), z.c.end());
        logw_.push_back(logweight);
    }

    /// Shifts log-weights so they log-sum to zero.
    void normalize();

    /// log sum exp of the weights (0 when normalized).
    double log_mass() const;

    /// Weighted sum of point evaluations (weak-* pairing with atoms).
    double integrate(const std::function<double(const TorusPoint&)>& phi) const;
    double integrate(const TestFunction& phi) const {
        return integrate([&phi](const TorusPoint& z) { return phi.eval(z); });
    }

    /// Merge-within-radius then top-cap compaction; renormalizes.
    void compact(double merge_radius, std::size_t cap);

    nlohmann::json to_json() const;
    static ParticleMeasure from_json(const nlohmann::json& j);

private:
    int d_;
    std::vector<double> coords_; // flattened, size() * d_
    std::vector<double> logw_;
};

} // namespace evp
