#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

#include "iflow/vec.hpp"

namespace iflow {

// SplitMix64 generator. The standard library distributions are
// implementation-defined, which would break bit-reproducibility of sampled
// checks across toolchains, so sampling is done from raw 64-bit draws.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller (cosine branch only)
    double gaussian() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

inline Vec random_unit_vector(SplitMix64& rng, int dim) {
    Vec u(static_cast<std::size_t>(dim));
    double n = 0.0;
    do {
        for (auto& c : u) c = rng.gaussian();
        n = norm(u);
    } while (n < 1e-12);
    for (auto& c : u) c /= n;
    return u;
}

// uniform in the closed ball B(center, radius)
inline Vec sample_in_ball(SplitMix64& rng, const Vec& center, double radius) {
    const int dim = static_cast<int>(center.size());
    Vec u = random_unit_vector(rng, dim);
    const double rho = radius * std::pow(rng.uniform01(), 1.0 / dim);
    for (std::size_t i = 0; i < center.size(); ++i) u[i] = center[i] + rho * u[i];
    return u;
}

}  // namespace iflow
