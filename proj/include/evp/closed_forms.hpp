#pragma once

#include <cmath>

#include "evp/errors.hpp"

namespace evp {

inline constexpr double kResonanceTol = 1e-12;

inline void check_nonresonant(long long q, double alpha) {
    if (std::abs(std::sin(M_PI * static_cast<double>(q) * alpha)) <= kResonanceTol)
        throw ResonantAngle("resonant alpha: sin(pi*q*alpha) ~ 0 for q=" + std::to_string(q));
}

/// Closed form of sin(2 pi q t) + sin(2 pi q (t+alpha)) + ... + sin(2 pi q (t+(n-1)alpha)),
/// i.e. n terms starting at t. Matches term-by-term summation; adding one more
/// term (n+1 in total) reproduces the other common display of this identity.
inline double sine_sum_closed_form(long long q, double alpha, double t, long long n) {
    check_nonresonant(q, alpha);
    double qd = static_cast<double>(q);
    double half_step = M_PI * qd * alpha;            // phi/2 with phi = 2 pi q alpha
    double theta = 2.0 * M_PI * qd * t;
    double nd = static_cast<double>(n);
    return std::sin(nd * half_step) * std::sin(theta + (nd - 1.0) * half_step) /
           std::sin(half_step);
}

/// cos(pi q alpha) / (2 sin(pi q alpha)); grows like r/(2 pi) when
/// alpha = p/q + 1/(q r) approaches the rational p/q.
inline double zeta_r(long long q, double alpha) {
    check_nonresonant(q, alpha);
    double x = M_PI * static_cast<double>(q) * alpha;
    return std::cos(x) / (2.0 * std::sin(x));
}

} // namespace evp
