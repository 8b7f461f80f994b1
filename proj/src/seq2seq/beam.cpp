#include "dualoop/seq2seq/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualoop {

bool shortlex_less(const Sentence& a, const Sentence& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double hypothesis_score(const BeamHypothesis& h, bool len_norm) {
  return len_norm ? h.log_prob / static_cast<double>(h.tokens.size() + 1) : h.log_prob;
}

namespace {

struct Candidate {
  std::size_t parent;
  TokenId token;
  double log_prob;
};

// Shortlex comparison of parent.tokens (+ token unless EOS) without copying.
bool candidate_tokens_less(const std::vector<BeamHypothesis>& live, const Candidate& a,
                           const Candidate& b) {
  const Sentence& pa = live[a.parent].tokens;
  const Sentence& pb = live[b.parent].tokens;
  const std::size_t la = pa.size() + (a.token == kEos ? 0 : 1);
  const std::size_t lb = pb.size() + (b.token == kEos ? 0 : 1);
  if (la != lb) return la < lb;
  for (std::size_t i = 0; i < la; ++i) {
    const TokenId x = i < pa.size() ? pa[i] : a.token;
    const TokenId y = i < pb.size() ? pb[i] : b.token;
    if (x != y) return x < y;
  }
  return false;
}

}  // namespace

std::vector<BeamHypothesis> beam_search(const Seq2SeqParams& params, const Sentence& src,
                                        std::size_t width, std::size_t max_len, bool len_norm) {
  if (width < 1) throw std::invalid_argument("beam_search: beam width must be >= 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len must be >= 1");
  const EncoderStates enc = encode_source(params, src);

  std::vector<BeamHypothesis> live(1);
  live[0].state = initial_decoder_state(params, enc);
  std::vector<BeamHypothesis> pool;

  std::vector<Candidate> cands;
  std::vector<DecodeStep> steps;
  for (std::size_t t = 1; t <= max_len && !live.empty(); ++t) {
    cands.clear();
    steps.clear();
    for (std::size_t h = 0; h < live.size(); ++h) {
      steps.push_back(decode_step(params, live[h].state, enc));
      const Vector& p = steps.back().probs;
      for (Eigen::Index y = 0; y < p.size(); ++y) {
        if (p[y] > 0.0) {
          cands.push_back({h, static_cast<TokenId>(y), live[h].log_prob + std::log(p[y])});
        }
      }
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      return candidate_tokens_less(live, a, b);
    };
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      better);

    std::vector<BeamHypothesis> next_live;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      BeamHypothesis hyp;
      hyp.tokens = live[c.parent].tokens;
      hyp.log_prob = c.log_prob;
      if (c.token == kEos) {
        hyp.terminated = true;
        hyp.state = live[c.parent].state;
        pool.push_back(std::move(hyp));
      } else {
        hyp.tokens.push_back(c.token);
        hyp.state = steps[c.parent].next;
        hyp.state.last = c.token;
        next_live.push_back(std::move(hyp));
      }
    }
    live = std::move(next_live);
    if (pool.size() >= width) break;
  }

  if (pool.size() < width) {
    // Survivors at max_len: close them with their EOS probability.
    for (auto& hyp : live) {
      const DecodeStep step = decode_step(params, hyp.state, enc);
      hyp.log_prob += std::log(step.probs[kEos]);
      hyp.terminated = true;
      pool.push_back(std::move(hyp));
    }
  }

  std::sort(pool.begin(), pool.end(), [&](const BeamHypothesis& a, const BeamHypothesis& b) {
    const double sa = hypothesis_score(a, len_norm);
    const double sb = hypothesis_score(b, len_norm);
    if (sa != sb) return sa > sb;
    return shortlex_less(a.tokens, b.tokens);
  });
  if (pool.size() > width) pool.resize(width);
  return pool;
}

}  // namespace dualoop
