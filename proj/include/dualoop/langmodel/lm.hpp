#pragma once

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/numerics/optim.hpp"
#include "dualoop/numerics/rng.hpp"
#include "dualoop/numerics/tensor.hpp"

#include <filesystem>
#include <vector>

namespace dualoop {

struct LmDims {
  std::size_t vocab = 0;
  std::size_t emb = 32;
  std::size_t hid = 64;
  friend bool operator==(const LmDims&, const LmDims&) = default;
};

/// GRU language model. Entries: emb (V x E), gru.W (3H x E), gru.U (3H x H),
/// gru.b (3H x 1), out.W (V x H), out.b (V x 1).
struct LmParams {
  LmDims dims;
  ParamStore store;
};

LmParams init_lm(const LmDims& dims, Rng& rng);
LmParams zero_lm(const LmDims& dims);

/// log P(s + EOS) starting from BOS; with `normalize`, divided by |s| + 1.
double lm_score(const LmParams& lm, const Sentence& s, bool normalize = false);
/// log P of the tokens of `s` only (no EOS term). Empty prefix scores 0.
double lm_prefix_log_prob(const LmParams& lm, const Sentence& s);
/// P(. | prefix).
Vector lm_next_distribution(const LmParams& lm, const Sentence& prefix);

/// Adds scale * d lm_score(s) / d params into `grad`; returns lm_score(s).
double accumulate_lm_gradient(const LmParams& lm, const Sentence& s, double scale, ParamStore& grad);
ParamStore lm_gradient(const LmParams& lm, const Sentence& s);

/// exp(-total log-likelihood / total scored tokens).
double lm_perplexity(const LmParams& lm, const std::vector<Sentence>& sentences);

struct LmTrainConfig {
  std::size_t emb = 32;
  std::size_t hid = 64;
  OptimizerConfig optimizer;
  std::size_t batch = 32;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;
  /// Fraction of the corpus held out for early stopping.
  double valid_fraction = 0.05;
  std::size_t max_valid = 1000;
};

struct LmEpochLog {
  std::size_t epoch;
  double train_nll_per_token;
  double valid_ppl;
};

struct LmTrainResult {
  LmParams params;
  std::vector<LmEpochLog> log;
  std::vector<Sentence> held_out;
};

/// MLE training with early stopping on held-out perplexity; returns the best
/// held-out parameters.
LmTrainResult lm_train(const MonolingualCorpus& corpus, std::size_t vocab_size,
                       const LmTrainConfig& config, Rng& rng);

void save_lm(const std::filesystem::path& path, const LmParams& lm);
LmParams load_lm(const std::filesystem::path& path);

}  // namespace dualoop
