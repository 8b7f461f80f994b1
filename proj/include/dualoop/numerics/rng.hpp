#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace dualoop {

/// Seedable, splittable generator. Draws are bit-reproducible across runs
/// because the distribution arithmetic is implemented here rather than
/// delegated to the standard library's unspecified algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Derives an independent stream. Depends only on this generator's seed
  /// and `name`, never on how many values have been drawn.
  [[nodiscard]] Rng split(std::string_view name) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn proportionally to nonnegative `weights`.
  std::size_t categorical(std::span<const double> weights);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dualoop
