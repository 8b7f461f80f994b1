#pragma once

#include "dualoop/duallearn/rewards.hpp"
#include "dualoop/duallearn/soft_landing.hpp"
#include "dualoop/langmodel/lm.hpp"
#include "dualoop/seq2seq/model.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dualoop {

/// gamma(t) = base / (1 + decay * t).
struct LearningRate {
  double base = 0.0;
  double decay = 0.0;
  [[nodiscard]] double at(std::size_t t) const { return base / (1.0 + decay * static_cast<double>(t)); }
};

struct DualConfig {
  double alpha = 0.005;
  std::size_t K = 2;
  LearningRate gamma1{0.0002};
  LearningRate gamma2{0.02};
  std::size_t max_mid_len = 50;
  SoftLandingSchedule soft_landing;
  /// Global-norm clip applied to each gradient before its update; 0 disables.
  double grad_clip = 1.0;
  EstimatorMode estimator = EstimatorMode::BeamAverage;
  bool normalize_lm_reward = false;
  /// Subtract the mean candidate reward in the forward term.
  bool reward_baseline = false;
  /// Play the B-start game after the A-start game.
  bool symmetric = true;
  /// Learning rate of the bilingual likelihood term; 0 means gamma2.
  double bilingual_lr = 0.0;
  std::size_t batch = 16;
  std::size_t max_steps = 1000;
  std::size_t patience = 5;
  /// Validate every this many steps; 0 disables validation.
  std::size_t eval_every = 100;
  std::size_t eval_beam = 12;
  std::size_t eval_max_len = 50;
  std::size_t max_valid = 0;
  /// Include per-candidate rewards in the stats.
  bool log_rewards = false;

  void validate() const;
};

struct DualStepStats {
  std::size_t step = 0;
  char direction = 'A';  // which game: A-start or B-start
  double mean_r1 = 0.0;
  double mean_r2 = 0.0;
  double mean_r = 0.0;
  double grad_norm_ab = 0.0;  // before clipping
  double grad_norm_ba = 0.0;
  double bi_grad_norm = 0.0;
  double lr_forward = 0.0;
  double lr_backward = 0.0;
  double lr_bilingual = 0.0;
  double mono_fraction = 0.0;
  std::size_t n_mono = 0;
  std::size_t n_bi = 0;
  std::size_t skipped = 0;
  bool clipped = false;
  std::optional<double> val_bleu_ab;
  std::optional<double> val_bleu_ba;
  std::vector<RewardBreakdown> rewards;
};

nlohmann::ordered_json to_json(const DualStepStats& s);

/// Middle translations of `s` under `forward` per the estimator mode.
std::vector<Sentence> middle_candidates(const Seq2SeqParams& forward, const Sentence& s,
                                        const DualConfig& config);

struct GameGradients {
  ParamStore forward;
  ParamStore backward;
  std::vector<RewardBreakdown> rewards;
  std::size_t games = 0;
  std::size_t skipped = 0;
};

/// Sums the policy gradients of the games started from each sentence.
GameGradients play_games(const std::vector<Sentence>& starts, const Seq2SeqParams& forward,
                         const Seq2SeqParams& backward, const LmParams& lm_middle,
                         const DualConfig& config);

struct StepBatch {
  std::vector<Sentence> mono_a;          // A-start games
  std::vector<Sentence> mono_b;          // B-start games
  std::vector<SentencePair> bi_ab;       // likelihood terms for ab (A -> B)
  std::vector<SentencePair> bi_ba;       // likelihood terms for ba (B -> A)
  double mono_fraction = 1.0;
};

/// One step of the loop. All gradients are taken at the incoming parameters:
/// the A-start games give ab a gamma1 term and ba a gamma2 term, the B-start
/// games give ba a gamma1 term and ab a gamma2 term, and the bilingual pairs
/// add a likelihood term to each model. Returns one stats line per game side.
std::vector<DualStepStats> dual_batch_step(const StepBatch& batch, Seq2SeqParams& ab, Seq2SeqParams& ba,
                                           const LmParams& lm_a, const LmParams& lm_b,
                                           const DualConfig& config, std::size_t t);

/// dual_batch_step on one sentence per side.
std::vector<DualStepStats> dual_step(const Sentence& s_a, const Sentence& s_b, Seq2SeqParams& ab,
                                     Seq2SeqParams& ba, const LmParams& lm_a, const LmParams& lm_b,
                                     const DualConfig& config, std::size_t t);

struct DualData {
  const MonolingualCorpus& mono_a;
  const MonolingualCorpus& mono_b;
  /// Soft-landing pool, A -> B orientation.
  const BilingualCorpus& bilingual;
  /// Validation pairs, A -> B orientation.
  const BilingualCorpus& valid;
};

struct DualResult {
  Seq2SeqParams ab;
  Seq2SeqParams ba;
  std::vector<DualStepStats> log;
  std::optional<double> warm_val_bleu_ab;
  std::optional<double> warm_val_bleu_ba;
  std::size_t best_step = 0;
  double best_val_bleu_ab = 0.0;
  double best_val_bleu_ba = 0.0;
  std::size_t steps = 0;
};

struct DualCallbacks {
  std::function<void(const DualStepStats&)> on_stats;
  /// Called after each validation with the current models, including the
  /// warm models as step 0.
  std::function<void(std::size_t step, const Seq2SeqParams& ab, const Seq2SeqParams& ba, double val_bleu_ab,
                     double val_bleu_ba, bool best)>
      on_checkpoint;
};

/// Repeats batched dual steps until max_steps or until validation BLEU
/// (mean of both directions) has not improved for `patience` evaluations.
/// Returns the best-validation models.
DualResult train_dual(const DualData& data, const Seq2SeqParams& warm_ab, const Seq2SeqParams& warm_ba,
                      const LmParams& lm_a, const LmParams& lm_b, const DualConfig& config, Rng& rng,
                      const DualCallbacks& callbacks = {});

}  // namespace dualoop
