#pragma once

#include <cstdint>
#include <limits>
#include <utility>

namespace skinstack::detail {

/// SplitMix64 step. Used to derive independent substream seeds from
/// (seed, index) pairs so that per-image randomness does not depend on the
/// order in which images are processed.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ (index * 0xd1342543de82ef95ULL + 1));
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                                  std::uint64_t b) noexcept {
    return derive_seed(derive_seed(seed, a), b);
}

// The standard distributions are implementation-defined, so sampling is done
// by hand on top of a fully specified engine to keep outputs identical across
// standard libraries.

/// Uniform double in [0, 1) with 53 random bits.
template <typename Engine>
[[nodiscard]] double uniform01(Engine& engine) {
    static_assert(Engine::max() == std::numeric_limits<std::uint64_t>::max());
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi]; returns lo when the range is empty.
template <typename Engine>
[[nodiscard]] double uniform_real(Engine& engine, double lo, double hi) {
    const double u = uniform01(engine);
    if (!(hi > lo)) {
        return lo;
    }
    const double v = lo + (hi - lo) * u;
    return v > hi ? hi : v;
}

/// Uniform integer in [0, bound) by rejection, bound > 0.
template <typename Engine>
[[nodiscard]] std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine();
    while (draw >= limit) {
        draw = engine();
    }
    return draw % bound;
}

template <typename Engine>
[[nodiscard]] bool coin(Engine& engine) {
    return (engine() >> 63) != 0;
}

/// Fisher-Yates with the portable integer sampler above.
template <typename RandomIt, typename Engine>
void shuffle(RandomIt first, RandomIt last, Engine& engine) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = uniform_below(engine, i);
        using std::swap;
        swap(first[i - 1], first[j]);
    }
}

}  // namespace skinstack::detail
