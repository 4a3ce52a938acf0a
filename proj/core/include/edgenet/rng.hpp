#pragma once

#include <cstdint>
#include <vector>

namespace edgenet {

/// SplitMix64 counter-based generator. We use it everywhere instead of the
/// standard-library engines/distributions because the byte stream of those is
/// not pinned across standard library implementations, and every stochastic
/// choice in this project (shuffles, dropout masks, weight init, augmentation
/// parameters) must reproduce bit-exactly from a seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1) with 53 random bits; exact same value in float builds
    /// after narrowing, so mask decisions stay stable across precisions.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Multiply-shift (Lemire) without the
    /// rejection step: bias is < 2^-40 for every n we use and the mapping is a
    /// pure function of next(), which keeps shuffles reproducible.
    uint64_t bounded(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Uniform in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(bounded(static_cast<uint64_t>(hi - lo + 1)));
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    uint64_t state_;
};

/// Combine a seed with stream identifiers so unrelated consumers (shuffle vs
/// dropout vs augmentation) never share a raw counter sequence.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix_seed(mix_seed(a, b, c), d);
}

/// Seeded Fisher-Yates. Deterministic given the seed, independent of
/// standard-library shuffle implementations.
template <typename T>
void seeded_shuffle(std::vector<T>& v, uint64_t seed) {
    Rng rng(seed);
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace edgenet
