#pragma once

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/numerics/rng.hpp"

#include <variant>
#include <vector>

namespace dualoop {

struct SoftLandingSchedule {
  double initial_fraction = 0.5;
  double final_fraction = 1.0;
  std::size_t ramp_steps = 1000;
  double bilingual_weight = 1.0;

  /// clamp(initial + (final - initial) * t / ramp_steps, initial, final).
  [[nodiscard]] double mono_fraction(std::size_t t) const;
  void validate() const;
};

struct MonoItem {
  Sentence sentence;
};
struct BiItem {
  SentencePair pair;
};
using BatchItem = std::variant<MonoItem, BiItem>;

struct MixedBatch {
  std::vector<BatchItem> items;  // mono items first, then bilingual
  double mono_fraction = 0.0;
  std::size_t n_mono = 0;
  std::size_t n_bi = 0;
};

/// round(fraction * batch) mono sentences drawn uniformly with replacement,
/// the rest bilingual pairs. An empty bilingual corpus makes the batch all mono.
MixedBatch soft_landing_batch(const MonolingualCorpus& mono, const BilingualCorpus& bi, std::size_t t,
                              const SoftLandingSchedule& schedule, std::size_t batch, Rng& rng);

}  // namespace dualoop
