#pragma once

#include <cstdint>
#include <limits>

namespace circamood {

namespace detail {
__extension__ using u128 = unsigned __int128;
}

/// Stream identifiers. Each test draws from its own family of substreams so
/// that one master seed drives every test independently.
enum class StreamId : std::uint64_t {
    Permutation = 1,
    Bootstrap = 2,
    Synth = 3,
    Simulation = 4,
};

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

/// Derives the key of substream (seed, stream, index). Keys depend on these
/// three values only, never on scheduling.
[[nodiscard]] constexpr std::uint64_t substream_key(std::uint64_t seed, StreamId stream,
                                                    std::uint64_t index) noexcept {
    std::uint64_t k = mix64(seed + 0x9e3779b97f4a7c15ULL);
    k = mix64(k ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
    return mix64(k + index * 0x9e3779b97f4a7c15ULL + 1);
}

/// Counter-based generator: the i-th output is mix64(key + (i + 1) * gamma).
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
    constexpr CounterRng(std::uint64_t seed, StreamId stream, std::uint64_t index) noexcept
        : key_(substream_key(seed, stream, index)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform integer in [0, bound) by multiply-shift with rejection
    /// (Lemire). Platform independent, unlike std::uniform_int_distribution.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) {
            return 0;
        }
        auto product = static_cast<detail::u128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<detail::u128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64U);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11U) * 0x1.0p-53;
    }

    [[nodiscard]] constexpr std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by CounterRng::below.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, CounterRng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        using std::swap;
        swap(first[i - 1], first[j]);
    }
}

}  // namespace circamood
