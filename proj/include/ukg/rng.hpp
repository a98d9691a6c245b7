#pragma once
// Deterministic random helpers. std::uniform_int_distribution and
// std::shuffle are implementation-defined, so draws go through these
// instead to keep outputs reproducible across toolchains.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace ukg {

using Rng = std::mt19937_64;

// Unbiased draw from [0, n). n must be >= 1.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

// Uniform double in [0, 1) with 53 bits of entropy.
inline double uniform_unit(Rng& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = std::size_t(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace ukg
