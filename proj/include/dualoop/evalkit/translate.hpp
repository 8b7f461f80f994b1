#pragma once

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/evalkit/bleu.hpp"
#include "dualoop/seq2seq/model.hpp"

#include <functional>
#include <vector>

namespace dualoop {

using TranslateFn = std::function<Sentence(const Sentence&)>;

/// Top-1 beam translation with raw (or length-normalized) scores.
TranslateFn beam_translator(const Seq2SeqParams& params, std::size_t beam, std::size_t max_len,
                            bool len_norm = false);

std::vector<Sentence> translate_all(const TranslateFn& fn, const std::vector<Sentence>& sources);

/// BLEU of fn(source) against target over a bilingual set.
BleuReport evaluate_bleu(const TranslateFn& fn, const BilingualCorpus& corpus);

/// Forward then backward top-1 translation, scored against the originals.
BleuReport reconstruction_bleu(const TranslateFn& forward, const TranslateFn& backward,
                               const std::vector<Sentence>& sentences);
BleuReport reconstruction_bleu(const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                               const std::vector<Sentence>& sentences, std::size_t beam,
                               std::size_t max_len);

}  // namespace dualoop
