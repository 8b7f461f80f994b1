#include "dualoop/baselines/pseudo.hpp"

#include <stdexcept>

namespace dualoop {

std::string to_string(PseudoOrientation o) {
  return o == PseudoOrientation::BackTranslation ? "back" : "forward";
}

PseudoOrientation parse_pseudo_orientation(std::string_view s) {
  if (s == "back") return PseudoOrientation::BackTranslation;
  if (s == "forward") return PseudoOrientation::ForwardTranslation;
  throw std::invalid_argument("unknown pseudo orientation '" + std::string(s) + "' (expected back|forward)");
}

BilingualCorpus generate_pseudo_pairs(const TranslateFn& model, const MonolingualCorpus& mono,
                                      std::size_t max_len, PseudoOrientation orientation) {
  BilingualCorpus out;
  for (const auto& s : mono.sentences) {
    Sentence t = model(s);
    if (s.empty() || t.empty() || s.size() > max_len || t.size() > max_len) continue;
    if (orientation == PseudoOrientation::BackTranslation) {
      out.pairs.push_back({std::move(t), s});
    } else {
      out.pairs.push_back({s, std::move(t)});
    }
  }
  return out;
}

BilingualCorpus generate_pseudo_pairs(const Seq2SeqParams& model, const MonolingualCorpus& mono,
                                      std::size_t beam, std::size_t max_len,
                                      PseudoOrientation orientation) {
  return generate_pseudo_pairs(beam_translator(model, beam, max_len), mono, max_len, orientation);
}

BilingualCorpus merge_corpora(const BilingualCorpus& bi, const BilingualCorpus& pseudo) {
  BilingualCorpus out = bi;
  out.pairs.insert(out.pairs.end(), pseudo.pairs.begin(), pseudo.pairs.end());
  return out;
}

MleResult train_pseudo(const BilingualCorpus& bi, const BilingualCorpus& pseudo,
                       const BilingualCorpus& valid, std::size_t src_vocab, std::size_t tgt_vocab,
                       const MleConfig& config, Rng& rng, const MleProgressFn& progress) {
  return train_mle(merge_corpora(bi, pseudo), valid, src_vocab, tgt_vocab, config, rng, std::nullopt,
                   progress);
}

}  // namespace dualoop
