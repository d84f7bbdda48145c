#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "evp/torus.hpp"

namespace evp {

/// Finite real trigonometric polynomial on T^d:
///   f(z) = sum_k [ a_k cos(2 pi k.z) + b_k sin(2 pi k.z) ],  k in Z^d.
/// Terms are stored under a canonical key (first nonzero component of k
/// positive); the mean is the cosine amplitude at k = 0.
class TrigPoly {
public:
    explicit TrigPoly(int d) : d_(d) {
        if (d < 1) throw Error("TrigPoly: dimension must be >= 1");
    }
    static TrigPoly zero(int d) { return TrigPoly(d); }

    /// Accumulates a*cos(2 pi k.z) + b*sin(2 pi k.z).
    void add_term(std::vector<int> k, double cos_amp, double sin_amp) {
        if (static_cast<int>(k.size()) != d_)
            throw DimensionMismatch("TrigPoly term: frequency dim mismatch");
        bool zero = true, flip = false;
        for (int v : k) {
            if (v != 0) {
                zero = false;
                flip = v < 0;
                break;
            }
        }
        if (zero) {
            mean_ += cos_amp; // sin(0) contributes nothing
            return;
        }
        if (flip) {
            for (int& v : k) v = -v;
            sin_amp = -sin_amp;
        }
        auto& t = terms_[std::move(k)];
        t.first += cos_amp;
        t.second += sin_amp;
    }

    int dim() const { return d_; }
    double mean() const { return mean_; }
    void set_mean(double m) { mean_ = m; }

    /// Largest sum |k_i| over stored frequencies (0 for a constant).
    int degree() const {
        int deg = 0;
        for (const auto& [k, amp] : terms_) {
            int s = 0;
            for (int v : k) s += std::abs(v);
            deg = std::max(deg, s);
        }
        return deg;
    }

    std::size_t term_count() const { return terms_.size(); }
    const std::map<std::vector<int>, std::pair<double, double>>& terms() const { return terms_; }

    /// |mean| + sum of term amplitudes; an upper bound for sup |f|.
    double sup_norm_bound() const {
        double s = std::abs(mean_);
        for (const auto& [k, amp] : terms_) s += std::hypot(amp.first, amp.second);
        return s;
    }

    double eval(const TorusPoint& z) const {
        if (z.dim() != d_) throw DimensionMismatch("TrigPoly eval: point dim mismatch");
        double s = mean_;
        for (const auto& [k, amp] : terms_) {
            double phase = 0.0;
            for (int i = 0; i < d_; ++i) phase += static_cast<double>(k[static_cast<std::size_t>(i)]) * z[i];
            double theta = 2.0 * M_PI * phase;
            s += amp.first * std::cos(theta) + amp.second * std::sin(theta);
        }
        return s;
    }

    /// Convenience for d = 1.
    double eval1(double t) const { return eval(TorusPoint({fracd(t)})); }

    TrigPoly plus_scaled(const TrigPoly& other, double scale) const {
        if (other.d_ != d_) throw DimensionMismatch("TrigPoly add: dim mismatch");
        TrigPoly out = *this;
        out.mean_ += scale * other.mean_;
        for (const auto& [k, amp] : other.terms_) {
            auto& t = out.terms_[k];
            t.first += scale * amp.first;
            t.second += scale * amp.second;
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json terms = nlohmann::json::array();
        if (mean_ != 0.0)
            terms.push_back({{"k", std::vector<int>(static_cast<std::size_t>(d_), 0)},
                             {"cos", mean_},
                             {"sin", 0.0}});
        for (const auto& [k, amp] : terms_)
            terms.push_back({{"k", k}, {"cos", amp.first}, {"sin", amp.second}});
        return nlohmann::json{{"d", d_}, {"terms", terms}};
    }

    static TrigPoly from_json(const nlohmann::json& j) {
        TrigPoly f(j.at("d").get<int>());
        for (const auto& t : j.at("terms"))
            f.add_term(t.at("k").get<std::vector<int>>(), t.at("cos").get<double>(),
                       t.at("sin").get<double>());
        return f;
    }

    // Common building blocks.
    static TrigPoly sine(int d, std::vector<int> k, double amp) {
        TrigPoly f(d);
        f.add_term(std::move(k), 0.0, amp);
        return f;
    }
    static TrigPoly cosine(int d, std::vector<int> k, double amp) {
        TrigPoly f(d);
        f.add_term(std::move(k), amp, 0.0);
        return f;
    }

private:
    int d_;
    double mean_ = 0.0;
    std::map<std::vector<int>, std::pair<double, double>> terms_;
};

/// Mean of log(p/q); zero iff the environment is symmetric.
inline double symmetry_defect(const TrigPoly& f) { return f.mean(); }

} // namespace evp
