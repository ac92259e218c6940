#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "memoryheat/grid.hpp"

namespace memoryheat {

// Deterministic RNG built on the bit-exact mt19937_64 stream. Distribution
// transforms are hand-rolled so a (seed, call sequence) pair reproduces the
// same doubles on any platform with the same libm.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform in [0,1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (fresh pair each call, no cache state).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t bits() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

inline GridFunction random_field(const Grid& g, Rng& rng, double amplitude = 1.0) {
    GridFunction u(g);
    for (double& x : u.v) x = amplitude * rng.normal();
    return u;
}

} // namespace memoryheat
