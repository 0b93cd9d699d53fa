#pragma once

#include <cstdint>

namespace etncs {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, index), so results do not depend on call order.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
        return mix(seed_ ^ mix(stream_ + 0x632be59bd9b4e019ULL) ^ mix(index + 0x9e3779b97f4a7c15ULL * 3));
    }

    /// Uniform in [0, 1).
    [[nodiscard]] constexpr double uniform(std::uint64_t index) const noexcept {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace etncs
