#include "dualoop/baselines/mle.hpp"

#include "dualoop/evalkit/translate.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dualoop {

double mle_batch_objective(const Seq2SeqParams& params, const std::vector<SentencePair>& batch) {
  if (batch.empty()) throw std::invalid_argument("mle_batch_objective: empty batch");
  double total = 0.0;
  for (const auto& p : batch) total += sequence_log_prob(params, p.source, p.target);
  return total / static_cast<double>(batch.size());
}

ParamStore mle_batch_gradient(const Seq2SeqParams& params, const std::vector<SentencePair>& batch) {
  if (batch.empty()) throw std::invalid_argument("mle_batch_gradient: empty batch");
  ParamStore g = params.store.zeros_like();
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& p : batch) accumulate_log_prob_gradient(params, p.source, p.target, scale, g);
  return g;
}

MleResult train_mle(const BilingualCorpus& bi, const BilingualCorpus& valid, std::size_t src_vocab,
                    std::size_t tgt_vocab, const MleConfig& config, Rng& rng,
                    const std::optional<Seq2SeqParams>& init, const MleProgressFn& progress) {
  if (bi.empty()) throw std::invalid_argument("train_mle: empty bilingual corpus");
  if (valid.empty()) throw std::invalid_argument("train_mle: empty validation corpus");
  if (config.batch < 1 || config.max_epochs < 1 || config.patience < 1 || config.eval_beam < 1) {
    throw std::invalid_argument("train_mle: batch, max_epochs, patience and eval_beam must be positive");
  }
  for (const auto& p : bi.pairs) {
    validate_sentence(p.source, src_vocab, "train_mle source");
    validate_sentence(p.target, tgt_vocab, "train_mle target");
  }

  Rng init_rng = rng.split("mle-init");
  Rng order_rng = rng.split("mle-order");
  Seq2SeqParams params;
  if (init) {
    if (init->dims.src_vocab != src_vocab || init->dims.tgt_vocab != tgt_vocab) {
      throw std::invalid_argument("train_mle: initial model vocabulary sizes differ from the corpus");
    }
    params = *init;
  } else {
    params = init_seq2seq({src_vocab, tgt_vocab, config.emb, config.hid, config.att}, init_rng);
  }

  BilingualCorpus select = valid;
  if (config.max_valid > 0 && select.pairs.size() > config.max_valid) select.pairs.resize(config.max_valid);

  DescentOptimizer opt(config.optimizer, params.store);
  ParamStore grad = params.store.zeros_like();
  std::vector<std::size_t> idx(bi.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  MleResult result;
  result.params = params;
  result.best_valid_bleu = -1.0;
  std::size_t since_best = 0;
  std::size_t batches = 0;
  double ll = 0.0;
  std::size_t tokens = 0;
  bool stop = false;

  auto evaluate = [&](std::size_t epoch) {
    const double bleu = evaluate_bleu(beam_translator(params, config.eval_beam, config.eval_max_len), select).bleu;
    MleEvalLog entry{epoch, batches, tokens ? ll / double(tokens) : 0.0, bleu};
    result.log.push_back(entry);
    if (progress) progress(entry);
    ll = 0.0;
    tokens = 0;
    if (bleu > result.best_valid_bleu) {
      result.best_valid_bleu = bleu;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      stop = true;
    }
  };

  for (std::size_t epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
    order_rng.shuffle(idx.begin(), idx.end());
    for (std::size_t start = 0; start < idx.size() && !stop; start += config.batch) {
      const std::size_t end = std::min(idx.size(), start + config.batch);
      grad.set_zero();
      // descent on the mean negative log-likelihood
      const double scale = -1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& p = bi.pairs[idx[k]];
        ll += accumulate_log_prob_gradient(params, p.source, p.target, scale, grad);
        tokens += p.target.size() + 1;
      }
      if (config.grad_clip > 0.0) clip_global_norm(grad, config.grad_clip);
      opt.step(params.store, grad);
      ++batches;
      if (config.eval_every > 0 && batches % config.eval_every == 0) evaluate(epoch);
    }
    if (config.eval_every == 0 && !stop) evaluate(epoch);
  }
  return result;
}

}  // namespace dualoop
