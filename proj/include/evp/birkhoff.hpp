#pragma once

#include "evp/trigpoly.hpp"

namespace evp {

/// Birkhoff sum along the rotation orbit.
///   n > 0: f(z) + f(z+alpha) + ... + f(z+(n-1)alpha)
///   n < 0: f(z-alpha) + f(z-2alpha) + ... + f(z-|n|alpha)
///   n = 0: 0
inline double birkhoff_sum(const TrigPoly& f, const RotationVector& alpha, const TorusPoint& z,
                           long long n) {
    OrbitCursor orbit(z, alpha);
    double s = 0.0;
    if (n > 0) {
        for (long long j = 0; j < n; ++j) s += f.eval(orbit.at(j));
    } else if (n < 0) {
        for (long long j = 1; j <= -n; ++j) s += f.eval(orbit.at(-j));
    }
    return s;
}

} // namespace evp
