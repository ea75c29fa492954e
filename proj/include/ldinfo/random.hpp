#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "ldinfo/error.hpp"

namespace ldinfo {

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator keyed by (seed, stream_id). The i-th draw is a pure
// function of the key and i, so streams can be derived per trial and consumed
// in any scheduling order without changing results.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  RandomSource(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed),
        stream_id_(stream_id),
        key_(detail::mix64(seed ^ detail::mix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t draws() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * 0xD1B54A32D192ED03ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in {0, ..., m-1}, unbiased (rejection on the top range).
  std::size_t choose(std::size_t m) {
    if (m == 0) throw InvalidArgument("choose: empty range");
    if (m == 1) return 0;
    const std::uint64_t bound = static_cast<std::uint64_t>(m);
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v <= limit) return static_cast<std::size_t>(v % bound);
    }
  }

  bool coin() { return choose(2) == 1; }

  /// Independent child stream. Depends only on this source's key, not on how
  /// many values have been drawn from it.
  RandomSource derive(std::uint64_t child) const noexcept {
    return RandomSource(detail::mix64(key_ ^ 0xA0761D6478BD642FULL), child);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Anything that hands out uniform choices; randomized algorithms draw all of
/// their internal randomness through this so it can be enumerated exactly.
template <class C>
concept CoinSource = requires(C& c, std::size_t m) {
  { c.choose(m) } -> std::convertible_to<std::size_t>;
};

static_assert(CoinSource<RandomSource>);

}  // namespace ldinfo
