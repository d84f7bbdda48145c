#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

#include "evp/errors.hpp"

namespace evp {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Fractional part of an exact rational, in [0,1).
inline Rational frac(const Rational& r) {
    BigInt n = boost::multiprecision::numerator(r);
    BigInt d = boost::multiprecision::denominator(r); // d > 0, gcd reduced
    BigInt q = n / d;
    if (n < 0 && q * d != n) q -= 1; // floor division
    return r - Rational(q);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const BigInt& n) { return n.convert_to<double>(); }

/// Parses "num/den" (or plain "num") with arbitrary-precision integers.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(s));
        return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw ConfigError("cannot parse rational: '" + s + "'");
    }
}

/// Canonical "num/den" form (den omitted when 1).
inline std::string rational_str(const Rational& r) {
    BigInt d = boost::multiprecision::denominator(r);
    std::string s = boost::multiprecision::numerator(r).str();
    if (d != 1) s += "/" + d.str();
    return s;
}

/// Euclidean remainder, result in [0, m).
inline std::int64_t mod_euclid(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

/// (a*b) mod m for 0 <= a,b < m < 2^63, exact via 128-bit intermediate.
inline std::int64_t mulmod_i64(std::int64_t a, std::int64_t b, std::int64_t m) {
    return static_cast<std::int64_t>((static_cast<__int128>(a) * b) % m);
}

} // namespace evp
