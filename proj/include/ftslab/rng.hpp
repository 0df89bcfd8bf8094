#pragma once

// Deterministic per-stream random numbers. Every simulated path and every
// sampling-based checker owns one SplitMix stream keyed by (seed) or
// (master_seed, stream_index), so results do not depend on worker scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ftslab {

// splitmix64 (Steele, Lea, Flood); one output per state advance.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Scrambles (master_seed, stream_index) into a stream seed so that adjacent
// indices give decorrelated streams.
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t s = master_seed + 0x9E3779B97F4A7C15ull * (stream_index + 1);
    s = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9ull;
    s = (s ^ (s >> 27)) * 0x94D049BB133111EBull;
    return s ^ (s >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : state_(derive_stream_seed(master_seed, stream_index)) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform on (0, 1]; never 0, so it is safe under log().
    double uniform01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ftslab
