#include "dualoop/evalkit/translate.hpp"

#include "dualoop/seq2seq/beam.hpp"

namespace dualoop {

TranslateFn beam_translator(const Seq2SeqParams& params, std::size_t beam, std::size_t max_len,
                            bool len_norm) {
  return [&params, beam, max_len, len_norm](const Sentence& src) {
    auto hyps = beam_search(params, src, beam, max_len, len_norm);
    return hyps.front().tokens;
  };
}

std::vector<Sentence> translate_all(const TranslateFn& fn, const std::vector<Sentence>& sources) {
  std::vector<Sentence> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(fn(s));
  return out;
}

BleuReport evaluate_bleu(const TranslateFn& fn, const BilingualCorpus& corpus) {
  std::vector<Sentence> hyps, refs;
  hyps.reserve(corpus.size());
  refs.reserve(corpus.size());
  for (const auto& p : corpus.pairs) {
    hyps.push_back(fn(p.source));
    refs.push_back(p.target);
  }
  return corpus_bleu(hyps, refs);
}

BleuReport reconstruction_bleu(const TranslateFn& forward, const TranslateFn& backward,
                               const std::vector<Sentence>& sentences) {
  std::vector<Sentence> back;
  back.reserve(sentences.size());
  for (const auto& s : sentences) back.push_back(backward(forward(s)));
  return corpus_bleu(back, sentences);
}

BleuReport reconstruction_bleu(const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                               const std::vector<Sentence>& sentences, std::size_t beam,
                               std::size_t max_len) {
  return reconstruction_bleu(beam_translator(forward, beam, max_len),
                             beam_translator(backward, beam, max_len), sentences);
}

}  // namespace dualoop
