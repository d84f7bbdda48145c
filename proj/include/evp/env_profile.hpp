#pragma once

#include "evp/trigpoly.hpp"

namespace evp {

/// Environment derived from a log-ratio f = log(p/q) through the logistic map:
///   p = e^f / (1 + e^f),  q = 1 - p,  h = e^f.
/// Strict bounds 0 < p < 1 and p + q = 1 hold by construction.
class EnvProfile {
public:
    explicit EnvProfile(TrigPoly logratio) : f_(std::move(logratio)) {}

    int dim() const { return f_.dim(); }
    const TrigPoly& logratio() const { return f_; }

    double f(const TorusPoint& z) const { return f_.eval(z); }
    double p(const TorusPoint& z) const { return logistic(f_.eval(z)); }
    double q(const TorusPoint& z) const { return 1.0 - p(z); }
    double h(const TorusPoint& z) const { return std::exp(f_.eval(z)); }

    double log_p(const TorusPoint& z) const { return log_logistic(f_.eval(z)); }
    double log_q(const TorusPoint& z) const { return log_logistic(-f_.eval(z)); }

    /// Mean of the log-ratio; the environment is symmetric iff this is zero.
    double symmetry_defect() const { return f_.mean(); }

    static double logistic(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
    }
    /// log(logistic(x)), stable for large |x|.
    static double log_logistic(double x) {
        return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
    }

private:
    TrigPoly f_;
};

/// Wraps a log-ratio polynomial as an environment (h -> h/(1+h) applied to e^f).
inline EnvProfile xi_map(TrigPoly f) { return EnvProfile(std::move(f)); }

} // namespace evp
