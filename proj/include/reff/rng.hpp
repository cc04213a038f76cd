#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>

namespace reff {

/// Explicit seed value. Equal seeds give bit-identical sampling streams.
struct RngSeed {
    std::uint64_t value = 0;

    constexpr auto operator<=>(const RngSeed&) const = default;
};

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Seed for sub-stream `stream` of `seed`. Used to split work across pairs,
/// samples and threads without sharing generator state.
constexpr RngSeed derive_seed(RngSeed seed, std::uint64_t stream) {
    return RngSeed{detail::mix64(seed.value ^ detail::mix64(stream + detail::kGolden))};
}

/// Counter-based SplitMix64 generator: the k-th output is mix64(key + k * golden).
/// Satisfies UniformRandomBitGenerator, but the distributions below are
/// implemented here so streams do not depend on the standard library vendor.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(RngSeed seed) : key_(seed.value) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. Consumes two outputs per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t below(std::uint64_t bound) { return (*this)() % bound; }

    /// Fresh independent seed drawn from this stream.
    RngSeed split() { return RngSeed{(*this)()}; }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace reff
