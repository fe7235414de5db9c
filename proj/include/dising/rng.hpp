#pragma once

#include <cmath>
#include <cstdint>

namespace dising {

// Splitmix64: tiny, fast, and its output sequence is pinned by the seed alone,
// so results are reproducible across standard libraries and platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_double() { return std::ldexp(static_cast<double>(next() >> 11), -53); }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, bound) via rejection, bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    bool next_bool() { return (next() >> 63) != 0; }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed; used to hand child seeds to repetitions.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ULL + stream * 0x9e3779b97f4a7c15ULL));
    g.next();
    return g.next();
}

} // namespace dising
