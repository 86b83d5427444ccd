#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace noveval {

/// SplitMix64 generator. Hand-rolled instead of <random> engines because the
/// standard distributions are not bit-reproducible across library
/// implementations, and every artifact output here is contract-bound to be
/// byte-identical for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// One standard normal draw via Box-Muller. Always consumes exactly two
    /// uniforms, so streams stay aligned regardless of call pattern.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Hashes (seed, tags...) into a fresh stream seed. Counter-based derivation:
/// per-item generators built this way are independent of iteration order and
/// thread layout.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = seed;
    for (std::uint64_t t : tags) {
        h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        h ^= h >> 31;
    }
    return h;
}

inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return Rng(mix_seed(seed, tags));
}

}  // namespace noveval
