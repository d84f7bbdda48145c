#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evp/errors.hpp"
#include "evp/numeric.hpp"
#include "evp/rational.hpp"

namespace evp {

/// A point of T^d with canonical coordinates in [0,1).
struct TorusPoint {
    std::vector<double> c;

    TorusPoint() = default;
    explicit TorusPoint(std::vector<double> coords) : c(std::move(coords)) {
        for (double& x : c) x = fracd(x);
    }
    static TorusPoint of(std::initializer_list<double> coords) {
        return TorusPoint(std::vector<double>(coords));
    }
    int dim() const { return static_cast<int>(c.size()); }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
};

/// A rotation angle of T^d, optionally carried as exact reduced rationals.
/// The float view always equals the exact view rounded to nearest double.
class RotationVector {
public:
    static RotationVector from_floats(std::vector<double> a) {
        RotationVector v;
        v.flt_ = std::move(a);
        for (double& x : v.flt_) x = fracd(x);
        return v;
    }
    static RotationVector from_rationals(std::vector<Rational> a) {
        RotationVector v;
        v.exact_ = std::move(a);
        for (Rational& r : v.exact_) r = frac(r);
        v.flt_.reserve(v.exact_.size());
        for (const Rational& r : v.exact_) v.flt_.push_back(to_double(r));
        v.has_exact_ = true;
        return v;
    }
    static RotationVector from_strings(const std::vector<std::string>& a) {
        std::vector<Rational> r;
        r.reserve(a.size());
        for (const auto& s : a) r.push_back(parse_rational(s));
        return from_rationals(std::move(r));
    }

    int dim() const { return static_cast<int>(flt_.size()); }
    bool has_exact() const { return has_exact_; }
    const std::vector<double>& floats() const { return flt_; }
    const std::vector<Rational>& exact() const {
        if (!has_exact_) throw Error("rotation vector has no exact view");
        return exact_;
    }

    /// k * alpha_i mod 1 for each coordinate, exact when possible.
    std::vector<double> frac_multiple(long long k) const {
        std::vector<double> out(flt_.size());
        for (std::size_t i = 0; i < flt_.size(); ++i) {
            if (has_exact_) {
                out[i] = to_double(frac(Rational(k) * exact_[i]));
            } else {
                out[i] = fracd(static_cast<double>(k) * flt_[i]);
            }
        }
        return out;
    }

private:
    std::vector<double> flt_;
    std::vector<Rational> exact_;
    bool has_exact_ = false;
};

/// Random access to the orbit z + j*alpha mod 1. With an exact angle the
/// offset j*alpha mod 1 is reduced in integer arithmetic before the single
/// final rounding, so positions do not drift no matter how large |j| gets.
class OrbitCursor {
public:
    OrbitCursor(const TorusPoint& z, const RotationVector& alpha) {
        if (z.dim() != alpha.dim())
            throw DimensionMismatch("orbit: point dim " + std::to_string(z.dim()) +
                                    " vs angle dim " + std::to_string(alpha.dim()));
        base_ = z.c;
        if (alpha.has_exact()) {
            exact_ = true;
            for (const Rational& r : alpha.exact()) {
                BigInt nb = boost::multiprecision::numerator(r);
                BigInt db = boost::multiprecision::denominator(r);
                if (db <= BigInt(std::int64_t(1) << 62) && nb >= 0) {
                    num_.push_back(nb.convert_to<std::int64_t>());
                    den_.push_back(db.convert_to<std::int64_t>());
                    big_num_.emplace_back();
                    big_den_.emplace_back();
                } else {
                    num_.push_back(-1);
                    den_.push_back(-1);
                    big_num_.push_back(nb);
                    big_den_.push_back(db);
                }
            }
        } else {
            step_ = alpha.floats();
        }
    }

    int dim() const { return static_cast<int>(base_.size()); }

    TorusPoint at(long long j) const {
        std::vector<double> out(base_.size());
        for (std::size_t i = 0; i < base_.size(); ++i) {
            if (exact_) {
                double off;
                if (den_[i] > 0) {
                    if (den_[i] == 1) {
                        off = 0.0;
                    } else {
                        std::int64_t jm = mod_euclid(j, den_[i]);
                        off = static_cast<double>(mulmod_i64(jm, num_[i], den_[i])) /
                              static_cast<double>(den_[i]);
                    }
                } else {
                    BigInt jm = BigInt(j) % big_den_[i];
                    if (jm < 0) jm += big_den_[i];
                    off = to_double(Rational(jm * big_num_[i] % big_den_[i], big_den_[i]));
                }
                out[i] = fracd(base_[i] + off);
            } else {
                out[i] = fracd(base_[i] + static_cast<double>(j) * step_[i]);
            }
        }
        return TorusPoint(std::move(out));
    }

private:
    std::vector<double> base_;
    std::vector<double> step_;          // float path
    std::vector<std::int64_t> num_, den_; // exact fast path (den>0), else bigint
    std::vector<BigInt> big_num_, big_den_;
    bool exact_ = false;
};

/// z + k*alpha mod 1, canonical representative.
inline TorusPoint rotate_k(const TorusPoint& z, const RotationVector& alpha, long long k) {
    return OrbitCursor(z, alpha).at(k);
}

} // namespace evp
