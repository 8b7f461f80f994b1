#include "dualoop/duallearn/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace dualoop {

std::vector<RewardBreakdown> compute_rewards(const Sentence& s, const std::vector<Sentence>& candidates,
                                             const LmParams& lm, const Seq2SeqParams& back_model,
                                             double alpha, bool normalize_lm) {
  if (candidates.empty()) throw std::invalid_argument("compute_rewards: empty candidate list");
  std::vector<RewardBreakdown> out;
  out.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    RewardBreakdown r;
    r.k = k;
    r.alpha = alpha;
    r.r1 = lm_score(lm, candidates[k], normalize_lm);
    r.r2 = sequence_log_prob(back_model, candidates[k], s);
    r.r = alpha * r.r1 + (1.0 - alpha) * r.r2;
    out.push_back(r);
  }
  return out;
}

std::string to_string(EstimatorMode m) {
  return m == EstimatorMode::BeamAverage ? "beam-average" : "exact-expectation";
}

EstimatorMode parse_estimator_mode(std::string_view s) {
  if (s == "beam-average") return EstimatorMode::BeamAverage;
  if (s == "exact-expectation") return EstimatorMode::ExactExpectation;
  throw std::invalid_argument("unknown estimator mode '" + std::string(s) +
                              "' (expected beam-average|exact-expectation)");
}

std::vector<Sentence> enumerate_sequences(std::size_t vocab, std::size_t max_len) {
  if (vocab <= static_cast<std::size_t>(kEos)) throw std::invalid_argument("enumerate_sequences: vocabulary too small");
  std::vector<TokenId> alphabet;
  for (std::size_t id = 0; id < vocab; ++id) {
    if (static_cast<TokenId>(id) != kEos) alphabet.push_back(static_cast<TokenId>(id));
  }
  std::vector<Sentence> out;
  std::vector<Sentence> layer{Sentence{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Sentence> next;
    next.reserve(layer.size() * alphabet.size());
    for (const auto& prefix : layer) {
      for (TokenId id : alphabet) {
        Sentence s = prefix;
        s.push_back(id);
        next.push_back(std::move(s));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

PolicyGradients policy_gradients(const Sentence& s, const std::vector<Sentence>& candidates,
                                 const std::vector<RewardBreakdown>& rewards,
                                 const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                                 double alpha, EstimatorMode mode, std::size_t max_mid_len,
                                 double baseline) {
  if (candidates.empty()) throw std::invalid_argument("policy_gradients: empty candidate list");
  if (rewards.size() != candidates.size()) {
    throw std::invalid_argument("policy_gradients: " + std::to_string(rewards.size()) + " rewards for " +
                                std::to_string(candidates.size()) + " candidates");
  }
  if (mode == EstimatorMode::ExactExpectation &&
      candidates != enumerate_sequences(forward.dims.tgt_vocab, max_mid_len)) {
    throw std::invalid_argument(
        "policy_gradients: exact-expectation mode needs every complete sequence up to max_mid_len");
  }
  PolicyGradients g{forward.store.zeros_like(), backward.store.zeros_like()};
  const double uniform = 1.0 / static_cast<double>(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double w = mode == EstimatorMode::BeamAverage
                         ? uniform
                         : std::exp(sequence_log_prob(forward, s, candidates[k]));
    accumulate_log_prob_gradient(forward, s, candidates[k], w * (rewards[k].r - baseline), g.forward);
    if (alpha != 1.0) {
      accumulate_log_prob_gradient(backward, candidates[k], s, w * (1.0 - alpha), g.backward);
    }
  }
  return g;
}

double expected_reward(const Sentence& s, const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                       const LmParams& lm, double alpha, std::size_t max_mid_len, bool normalize_lm) {
  const auto mids = enumerate_sequences(forward.dims.tgt_vocab, max_mid_len);
  const auto rewards = compute_rewards(s, mids, lm, backward, alpha, normalize_lm);
  double total = 0.0;
  for (std::size_t k = 0; k < mids.size(); ++k) {
    total += std::exp(sequence_log_prob(forward, s, mids[k])) * rewards[k].r;
  }
  return total;
}

}  // namespace dualoop
