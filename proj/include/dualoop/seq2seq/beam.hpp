#pragma once

#include "dualoop/seq2seq/model.hpp"

#include <vector>

namespace dualoop {

struct BeamHypothesis {
  Sentence tokens;  // excludes EOS
  double log_prob = 0.0;
  bool terminated = false;
  DecoderState state;
};

/// Shorter first, then lexicographic by token id.
bool shortlex_less(const Sentence& a, const Sentence& b);

double hypothesis_score(const BeamHypothesis& h, bool len_norm);

/// Beam search over complete translations of 1..max_len tokens. Each step
/// keeps the `width` best expansions (ties: shortlex on tokens); expansions
/// ending in EOS retire. Stops once `width` hypotheses retired or at max_len,
/// where survivors are terminated with their EOS probability added. Returns at
/// most `width` hypotheses, best first.
std::vector<BeamHypothesis> beam_search(const Seq2SeqParams& params, const Sentence& src,
                                        std::size_t width, std::size_t max_len,
                                        bool len_norm = false);

}  // namespace dualoop
