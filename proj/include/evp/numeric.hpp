#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace evp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Canonical torus representative in [0,1); reduction uses floor, never round.
inline double fracd(double x) {
    double y = x - std::floor(x);
    return y >= 1.0 ? y - 1.0 : y;
}

/// Circle distance |x - y| on T (values need not be pre-reduced).
inline double circ_dist(double x, double y) {
    double d = fracd(x - y);
    return std::min(d, 1.0 - d);
}

inline double logaddexp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

/// Streaming log-sum-exp accumulator; never overflows for summands up to ~1e308 in log.
class LogSumAcc {
public:
    void add(double logx) {
        if (logx == kNegInf) return;
        if (logx <= max_) {
            sum_ += std::exp(logx - max_);
        } else {
            sum_ = (max_ == kNegInf) ? 1.0 : sum_ * std::exp(max_ - logx) + 1.0;
            max_ = logx;
        }
    }
    /// log of the running sum; -inf when empty.
    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }
    bool empty() const { return max_ == kNegInf; }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

/// Streaming weighted mean with log-domain weights. The mean is maintained as a
/// convex combination, so it stays inside the hull of the observed values.
class LogWeightedMeanAcc {
public:
    void add(double logw, double value) {
        lo_ = std::min(lo_, value);
        hi_ = std::max(hi_, value);
        if (logw == kNegInf) { acc_.add(logw); return; }
        if (logw <= max_) {
            double w = std::exp(logw - max_);
            sum_ += w;
            mean_ += (value - mean_) * (w / sum_);
        } else {
            if (max_ == kNegInf) {
                sum_ = 1.0;
                mean_ = value;
            } else {
                sum_ = sum_ * std::exp(max_ - logw) + 1.0;
                mean_ += (value - mean_) * (1.0 / sum_);
            }
            max_ = logw;
        }
        acc_.add(logw);
    }
    double mean() const { return std::clamp(mean_, lo_, hi_); }
    double log_total() const { return acc_.value(); }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
    double mean_ = 0.0;
    double lo_ = std::numeric_limits<double>::infinity();
    double hi_ = -std::numeric_limits<double>::infinity();
    LogSumAcc acc_;
};

} // namespace evp
