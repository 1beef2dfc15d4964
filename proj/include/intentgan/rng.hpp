#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace intentgan {

/// SplitMix64 generator.
///
/// Every draw is a pure function of (seed, number of prior draws). Named
/// streams are derived from the construction seed only, so `split("noise")`
/// returns the same stream no matter how much the parent has been used.
///
///   next_u64: state += 0x9E3779B97F4A7C15, then the SplitMix64 finalizer
///   uniform:  top 53 bits of next_u64 scaled by 2^-53, in [0, 1)
///   below(n): next_u64 % n
///   normal:   Box-Muller on (1 - uniform, uniform), cosine branch first,
///             the sine branch is cached for the following call
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept;
    std::uint64_t below(std::uint64_t n) noexcept;
    double normal() noexcept;

    /// Child seed = finalizer(seed ^ FNV-1a-64(name)).
    Rng split(std::string_view name) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

    /// Fisher-Yates, from the back: for i = n-1..1 swap(items[i], items[below(i+1)]).
    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept;

}  // namespace intentgan
