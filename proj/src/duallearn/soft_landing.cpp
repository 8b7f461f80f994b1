#include "dualoop/duallearn/soft_landing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualoop {

double SoftLandingSchedule::mono_fraction(std::size_t t) const {
  if (ramp_steps == 0) return final_fraction;
  const double f = initial_fraction +
                   (final_fraction - initial_fraction) * static_cast<double>(t) / static_cast<double>(ramp_steps);
  return std::clamp(f, initial_fraction, final_fraction);
}

void SoftLandingSchedule::validate() const {
  if (!(initial_fraction >= 0.0 && initial_fraction <= final_fraction && final_fraction <= 1.0)) {
    throw std::invalid_argument("soft landing: need 0 <= initial_fraction <= final_fraction <= 1");
  }
  if (!(bilingual_weight >= 0.0)) throw std::invalid_argument("soft landing: bilingual_weight must be >= 0");
}

MixedBatch soft_landing_batch(const MonolingualCorpus& mono, const BilingualCorpus& bi, std::size_t t,
                              const SoftLandingSchedule& schedule, std::size_t batch, Rng& rng) {
  if (batch < 1) throw std::invalid_argument("soft_landing_batch: batch size must be >= 1");
  if (mono.empty()) throw std::invalid_argument("soft_landing_batch: empty monolingual corpus");
  MixedBatch out;
  out.mono_fraction = schedule.mono_fraction(t);
  out.n_mono = bi.empty() ? batch
                          : static_cast<std::size_t>(std::llround(out.mono_fraction * static_cast<double>(batch)));
  out.n_bi = batch - out.n_mono;
  out.items.reserve(batch);
  for (std::size_t i = 0; i < out.n_mono; ++i) {
    out.items.emplace_back(MonoItem{mono.sentences[rng.below(mono.size())]});
  }
  for (std::size_t i = 0; i < out.n_bi; ++i) {
    out.items.emplace_back(BiItem{bi.pairs[rng.below(bi.size())]});
  }
  return out;
}

}  // namespace dualoop
