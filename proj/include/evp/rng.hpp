#pragma once

#include <cstdint>

namespace evp {

/// (seed, stream) pair; identical pairs yield identical sample sequences.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// splitmix64 stream. Streams are independent lanes derived from (seed, stream)
/// by avalanche mixing, so trajectory i can use stream = i under a common seed
/// and be reproducible regardless of scheduling.
class RngStream {
public:
    explicit RngStream(RngSpec spec) : RngStream(spec.seed, spec.stream) {}
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        state_ = mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
        state_ = mix(state_ ^ 0xBF58476D1CE4E5B9ULL);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

} // namespace evp
