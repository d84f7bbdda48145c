#pragma once

#include <variant>

#include "evp/trigpoly.hpp"

namespace evp {

/// Profile in the first coordinate: 0 on the band [zero_lo, zero_hi] (through
/// 0), 1 on [one_lo, one_hi], cosine ramps in between. Defaults give the
/// [-0.1,0.1] / [0.4,0.6] pair. Zero-width ramps (zero_hi = one_lo and
/// one_hi = zero_lo) degenerate to the indicator of [one_lo, one_hi].
struct RampX1 {
    double zero_hi = 0.1;  // flat 0 on [zero_lo, 1) u [0, zero_hi]
    double one_lo = 0.4;   // flat 1 on [one_lo, one_hi]
    double one_hi = 0.6;
    double zero_lo = 0.9;

    double operator()(double x1) const {
        double x = fracd(x1);
        if (x <= zero_hi || x >= zero_lo) return 0.0;
        if (x >= one_lo && x <= one_hi) return 1.0;
        if (x < one_lo) {
            double u = (x - zero_hi) / (one_lo - zero_hi);
            return 0.5 * (1.0 - std::cos(M_PI * u));
        }
        double u = (x - one_hi) / (zero_lo - one_hi);
        return 0.5 * (1.0 + std::cos(M_PI * u));
    }

    static RampX1 indicator(double lo, double hi) {
        RampX1 r;
        r.zero_hi = lo;
        r.one_lo = lo;
        r.one_hi = hi;
        r.zero_lo = hi;
        return r;
    }
};

/// Bounded test function: either a trigonometric polynomial or a ramp profile
/// of the first coordinate.
class TestFunction {
public:
    TestFunction(TrigPoly f) : impl_(std::move(f)) {}
    TestFunction(RampX1 r) : impl_(r) {}

    static TestFunction one() {
        TrigPoly f(1);
        f.set_mean(1.0);
        return TestFunction(std::move(f));
    }

    double eval(const TorusPoint& z) const {
        if (const auto* f = std::get_if<TrigPoly>(&impl_)) return f->eval(z);
        return std::get<RampX1>(impl_)(z[0]);
    }

    /// sup |phi| is bounded by this value (exact 1 for the ramp).
    double sup_bound() const {
        if (const auto* f = std::get_if<TrigPoly>(&impl_)) return f->sup_norm_bound();
        return 1.0;
    }

    bool is_ramp() const { return std::holds_alternative<RampX1>(impl_); }
    const TrigPoly* poly() const { return std::get_if<TrigPoly>(&impl_); }
    const RampX1* ramp() const { return std::get_if<RampX1>(&impl_); }

private:
    std::variant<TrigPoly, RampX1> impl_;
};

} // namespace evp
