#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qanneal {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Pure mixing function of x;
// used for seed derivation, not as a running generator.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Top 53 bits of a 64-bit word as a double in [0, 1).
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Standard-normal stream with a fully pinned-down draw discipline:
// the engine is std::mt19937_64 (algorithm fixed by the C++ standard),
// and each normal consumes exactly two 64-bit draws through the
// Box-Muller transform
//
//   z = sqrt(-2 ln u1) * cos(2 pi u2),  u1 in (0,1], u2 in [0,1),
//
// with the companion sine variate discarded. Regenerating from the same
// seed therefore reproduces the same sequence.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        const double u1 = 1.0 - u64_to_unit(eng_());  // (0,1], keeps log finite
        const double u2 = u64_to_unit(eng_());
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace qanneal
