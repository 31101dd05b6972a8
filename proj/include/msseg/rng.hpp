#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "msseg/common.hpp"

namespace msseg {

/// splitmix64 mixing step; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for stream (a, b) of a run seeded with `base`.
/// One seed -> one deterministic draw sequence per stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(base ^ mix64(a)) ^ mix64(b));
}

/// Seeded random stream. Distributions are implemented explicitly (not via
/// std::*_distribution) so draw sequences are identical across standard
/// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, n). n must be >= 1.
    std::uint64_t uniform_below(std::uint64_t n) {
        require(n >= 1, "Rng::uniform_below: n must be >= 1");
        if (n == 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Index drawn proportionally to the given nonnegative weights.
    std::size_t categorical(std::span<const double> weights) {
        require(!weights.empty(), "Rng::categorical: empty weight vector");
        double total = 0.0;
        for (double w : weights) {
            require(w >= 0.0, "Rng::categorical: negative weight");
            total += w;
        }
        require(total > 0.0, "Rng::categorical: weights sum to zero");
        const double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace msseg
