#ifndef SUBSPARSE_RNG_HPP
#define SUBSPARSE_RNG_HPP

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every draw is a pure function of
// (key, counter), so any value can be regenerated without storing state
// and trials can be fanned out across threads without changing results.

namespace subsparse {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Full-period mixing of a
// 64-bit counter into a 64-bit value.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t u64_at(std::uint64_t key, std::uint64_t i) {
    return mix64(key + (i + 1) * kGolden);
}

// Derives an independent stream key from a seed and up to three tags
// (e.g. trial index, grid index, purpose). Hash-combine chain.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed + kGolden);
    h = mix64(h ^ (a + kGolden + (h << 6) + (h >> 2)));
    h = mix64(h ^ (b + kGolden + (h << 6) + (h >> 2)));
    h = mix64(h ^ (c + kGolden + (h << 6) + (h >> 2)));
    return h;
}

// Uniform on (0,1), both endpoints excluded so log() is always safe.
inline double uniform01_at(std::uint64_t key, std::uint64_t i) {
    return (static_cast<double>(u64_at(key, i) >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller (cosine branch). Consumes the uniform
// pair at counters (2i, 2i+1), so entry i is randomly addressable.
inline double normal_at(std::uint64_t key, std::uint64_t i) {
    const double u1 = uniform01_at(key, 2 * i);
    const double u2 = uniform01_at(key, 2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Sequential convenience wrapper over the counter stream.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return u64_at(key_, ctr_++); }

    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform integer in [0, n), n >= 1. Lemire multiply-shift; the
    // O(2^-64) bias is irrelevant next to Monte Carlo noise.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace subsparse

#endif
