#pragma once

#include "dualoop/baselines/mle.hpp"
#include "dualoop/evalkit/translate.hpp"

#include <string>

namespace dualoop {

enum class PseudoOrientation {
  /// Mono sentences are targets; the reverse model synthesizes their sources.
  BackTranslation,
  /// Mono sentences are sources; the forward model synthesizes their targets.
  ForwardTranslation,
};

std::string to_string(PseudoOrientation o);
PseudoOrientation parse_pseudo_orientation(std::string_view s);

/// Decodes every mono sentence with `model` and pairs it with its
/// translation. Pairs with either side longer than max_len are dropped.
BilingualCorpus generate_pseudo_pairs(const TranslateFn& model, const MonolingualCorpus& mono,
                                      std::size_t max_len, PseudoOrientation orientation);
BilingualCorpus generate_pseudo_pairs(const Seq2SeqParams& model, const MonolingualCorpus& mono,
                                      std::size_t beam, std::size_t max_len,
                                      PseudoOrientation orientation);

/// bi followed by pseudo.
BilingualCorpus merge_corpora(const BilingualCorpus& bi, const BilingualCorpus& pseudo);

/// train_mle on bi + pseudo.
MleResult train_pseudo(const BilingualCorpus& bi, const BilingualCorpus& pseudo,
                       const BilingualCorpus& valid, std::size_t src_vocab, std::size_t tgt_vocab,
                       const MleConfig& config, Rng& rng, const MleProgressFn& progress = {});

}  // namespace dualoop
