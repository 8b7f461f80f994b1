#pragma once

#include "dualoop/langmodel/lm.hpp"
#include "dualoop/seq2seq/model.hpp"

#include <string>
#include <vector>

namespace dualoop {

struct RewardBreakdown {
  std::size_t k = 0;
  double r1 = 0.0;  // LM reward of the middle translation
  double r2 = 0.0;  // log P(original | middle) under the reverse model
  double r = 0.0;   // alpha * r1 + (1 - alpha) * r2
  double alpha = 0.0;
};

/// Rewards of each middle translation of `s`. With normalize_lm the LM reward
/// is per token.
std::vector<RewardBreakdown> compute_rewards(const Sentence& s, const std::vector<Sentence>& candidates,
                                             const LmParams& lm, const Seq2SeqParams& back_model,
                                             double alpha, bool normalize_lm = false);

enum class EstimatorMode {
  /// (1/K) over the beam candidates.
  BeamAverage,
  /// Every complete sequence up to the length cap, weighted by its
  /// probability under the forward model. Only feasible on tiny models.
  ExactExpectation,
};

std::string to_string(EstimatorMode m);
EstimatorMode parse_estimator_mode(std::string_view s);

struct PolicyGradients {
  ParamStore forward;   // ascent direction for the first-hop model
  ParamStore backward;  // ascent direction for the reconstruction model
};

/// Policy-gradient ascent directions for one game started from `s`.
/// In ExactExpectation mode `candidates` must be exactly
/// enumerate_sequences(forward vocab, max_mid_len) and the result is the exact
/// gradient of the truncated expectation of r. `baseline` is subtracted from
/// r in the forward term (0 disables).
PolicyGradients policy_gradients(const Sentence& s, const std::vector<Sentence>& candidates,
                                 const std::vector<RewardBreakdown>& rewards,
                                 const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                                 double alpha, EstimatorMode mode, std::size_t max_mid_len,
                                 double baseline = 0.0);

/// All sequences of 1..max_len ids in [0, vocab) other than EOS, shortlex order.
std::vector<Sentence> enumerate_sequences(std::size_t vocab, std::size_t max_len);

/// sum over enumerate_sequences of P(mid | s) * r(mid).
double expected_reward(const Sentence& s, const Seq2SeqParams& forward, const Seq2SeqParams& backward,
                       const LmParams& lm, double alpha, std::size_t max_mid_len,
                       bool normalize_lm = false);

}  // namespace dualoop
