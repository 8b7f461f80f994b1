#pragma once

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/numerics/optim.hpp"
#include "dualoop/numerics/rng.hpp"
#include "dualoop/seq2seq/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dualoop {

struct MleConfig {
  std::size_t emb = 32;
  std::size_t hid = 64;
  std::size_t att = 0;
  OptimizerConfig optimizer;
  std::size_t batch = 80;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;
  /// Validate every this many batches; 0 means once per epoch.
  std::size_t eval_every = 0;
  std::size_t eval_beam = 12;
  std::size_t eval_max_len = 50;
  /// Validation pairs used for model selection; 0 means all.
  std::size_t max_valid = 0;
  /// Optional global-norm clip of each batch gradient; 0 disables.
  double grad_clip = 0.0;
};

struct MleEvalLog {
  std::size_t epoch;
  std::size_t batches;
  double train_ll_per_token;  // running mean since the previous evaluation
  double valid_bleu;
};

struct MleResult {
  Seq2SeqParams params;
  std::vector<MleEvalLog> log;
  double best_valid_bleu = 0.0;
};

/// Mean over the batch of log P(target | source).
double mle_batch_objective(const Seq2SeqParams& params, const std::vector<SentencePair>& batch);
/// Gradient of mle_batch_objective.
ParamStore mle_batch_gradient(const Seq2SeqParams& params, const std::vector<SentencePair>& batch);

/// Called after every evaluation; lets callers stream progress.
using MleProgressFn = std::function<void(const MleEvalLog&)>;

/// Maximizes the bilingual log-likelihood with mini-batches, keeping the
/// parameters with the best validation BLEU. Starts from `init` when given,
/// otherwise from a fresh initialization drawn from `rng`.
MleResult train_mle(const BilingualCorpus& bi, const BilingualCorpus& valid, std::size_t src_vocab,
                    std::size_t tgt_vocab, const MleConfig& config, Rng& rng,
                    const std::optional<Seq2SeqParams>& init = std::nullopt,
                    const MleProgressFn& progress = {});

}  // namespace dualoop
