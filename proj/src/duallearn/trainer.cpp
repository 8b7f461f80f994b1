#include "dualoop/duallearn/trainer.hpp"

#include "dualoop/evalkit/translate.hpp"
#include "dualoop/numerics/optim.hpp"
#include "dualoop/seq2seq/beam.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualoop {

void DualConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("dual: alpha must be in [0, 1]");
  if (K < 1) throw std::invalid_argument("dual: K must be >= 1");
  if (!(gamma1.base >= 0.0) || !(gamma2.base >= 0.0) || !(bilingual_lr >= 0.0)) {
    throw std::invalid_argument("dual: learning rates must be nonnegative");
  }
  if (!(gamma1.decay >= 0.0) || !(gamma2.decay >= 0.0)) throw std::invalid_argument("dual: decay must be >= 0");
  if (max_mid_len < 1) throw std::invalid_argument("dual: max_mid_len must be >= 1");
  if (!(grad_clip >= 0.0)) throw std::invalid_argument("dual: grad_clip must be >= 0");
  if (batch < 1) throw std::invalid_argument("dual: batch must be >= 1");
  if (patience < 1) throw std::invalid_argument("dual: patience must be >= 1");
  if (eval_beam < 1 || eval_max_len < 1) throw std::invalid_argument("dual: eval_beam and eval_max_len must be >= 1");
  soft_landing.validate();
}

nlohmann::ordered_json to_json(const DualStepStats& s) {
  nlohmann::ordered_json j;
  j["step"] = s.step;
  j["direction"] = std::string(1, s.direction);
  j["mean_r1"] = s.mean_r1;
  j["mean_r2"] = s.mean_r2;
  j["mean_r"] = s.mean_r;
  j["grad_norm_ab"] = s.grad_norm_ab;
  j["grad_norm_ba"] = s.grad_norm_ba;
  j["bi_grad_norm"] = s.bi_grad_norm;
  j["lr_forward"] = s.lr_forward;
  j["lr_backward"] = s.lr_backward;
  j["lr_bilingual"] = s.lr_bilingual;
  j["mono_fraction"] = s.mono_fraction;
  j["n_mono"] = s.n_mono;
  j["n_bi"] = s.n_bi;
  j["skipped"] = s.skipped;
  j["clipped"] = s.clipped;
  if (s.val_bleu_ab) j["val_bleu_ab"] = *s.val_bleu_ab;
  if (s.val_bleu_ba) j["val_bleu_ba"] = *s.val_bleu_ba;
  if (!s.rewards.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : s.rewards) arr.push_back({{"k", r.k}, {"r1", r.r1}, {"r2", r.r2}, {"r", r.r}, {"alpha", r.alpha}});
    j["rewards"] = std::move(arr);
  }
  return j;
}

std::vector<Sentence> middle_candidates(const Seq2SeqParams& forward, const Sentence& s,
                                        const DualConfig& config) {
  if (config.estimator == EstimatorMode::ExactExpectation) {
    return enumerate_sequences(forward.dims.tgt_vocab, config.max_mid_len);
  }
  std::vector<Sentence> out;
  for (auto& h : beam_search(forward, s, config.K, config.max_mid_len)) out.push_back(std::move(h.tokens));
  return out;
}

GameGradients play_games(const std::vector<Sentence>& starts, const Seq2SeqParams& forward,
                         const Seq2SeqParams& backward, const LmParams& lm_middle,
                         const DualConfig& config) {
  GameGradients out{forward.store.zeros_like(), backward.store.zeros_like(), {}, 0, 0};
  for (const auto& s : starts) {
    const auto mids = middle_candidates(forward, s, config);
    if (mids.empty()) {
      ++out.skipped;
      continue;
    }
    auto rewards = compute_rewards(s, mids, lm_middle, backward, config.alpha, config.normalize_lm_reward);
    double baseline = 0.0;
    if (config.reward_baseline) {
      for (const auto& r : rewards) baseline += r.r;
      baseline /= static_cast<double>(rewards.size());
    }
    const auto g = policy_gradients(s, mids, rewards, forward, backward, config.alpha, config.estimator,
                                    config.max_mid_len, baseline);
    out.forward.add_scaled(g.forward, 1.0);
    out.backward.add_scaled(g.backward, 1.0);
    out.rewards.insert(out.rewards.end(), rewards.begin(), rewards.end());
    ++out.games;
  }
  return out;
}

namespace {

// Pending update of one model: sum of lr * clipped gradient terms, added in
// the order forward-role, backward-role, bilingual.
struct Update {
  ParamStore delta;
  bool any = false;

  void add(ParamStore& grad, double lr) {
    if (lr == 0.0) return;
    if (!any) {
      grad.scale(lr);
      delta = std::move(grad);
      any = true;
    } else {
      delta.add_scaled(grad, lr);
    }
  }
  void apply(Seq2SeqParams& model) const {
    if (any) model.store.add_scaled(delta, 1.0);
  }
};

// Returns the norm before clipping; sets `clipped` when clipping happened.
double clip(ParamStore& g, double max_norm, bool& clipped) {
  if (max_norm <= 0.0) return std::sqrt(g.squared_norm());
  const double norm = clip_global_norm(g, max_norm);
  if (norm > max_norm) clipped = true;
  return norm;
}

struct SideResult {
  DualStepStats stats;
  GameGradients games;
  ParamStore bi_grad;
  bool has_bi = false;
};

SideResult play_side(char direction, const std::vector<Sentence>& starts,
                     const std::vector<SentencePair>& bi, const Seq2SeqParams& forward,
                     const Seq2SeqParams& backward, const LmParams& lm_middle, const DualConfig& config,
                     std::size_t t, double mono_fraction) {
  SideResult side;
  side.games = play_games(starts, forward, backward, lm_middle, config);
  DualStepStats& st = side.stats;
  st.step = t;
  st.direction = direction;
  st.mono_fraction = mono_fraction;
  st.n_mono = starts.size();
  st.n_bi = bi.size();
  st.skipped = side.games.skipped;
  st.lr_forward = config.gamma1.at(t);
  st.lr_backward = config.gamma2.at(t);
  st.lr_bilingual = (config.bilingual_lr > 0.0 ? config.bilingual_lr : config.gamma2.at(t)) *
                    config.soft_landing.bilingual_weight;
  if (!side.games.rewards.empty()) {
    for (const auto& r : side.games.rewards) {
      st.mean_r1 += r.r1;
      st.mean_r2 += r.r2;
      st.mean_r += r.r;
    }
    const auto n = static_cast<double>(side.games.rewards.size());
    st.mean_r1 /= n;
    st.mean_r2 /= n;
    st.mean_r /= n;
  }
  if (config.log_rewards) st.rewards = side.games.rewards;

  const double fwd_norm = clip(side.games.forward, config.grad_clip, st.clipped);
  const double bwd_norm = clip(side.games.backward, config.grad_clip, st.clipped);
  st.grad_norm_ab = direction == 'A' ? fwd_norm : bwd_norm;
  st.grad_norm_ba = direction == 'A' ? bwd_norm : fwd_norm;

  if (!bi.empty() && st.lr_bilingual > 0.0) {
    side.bi_grad = forward.store.zeros_like();
    for (const auto& p : bi) accumulate_log_prob_gradient(forward, p.source, p.target, 1.0, side.bi_grad);
    st.bi_grad_norm = clip(side.bi_grad, config.grad_clip, st.clipped);
    side.has_bi = true;
  }
  return side;
}

}  // namespace

std::vector<DualStepStats> dual_batch_step(const StepBatch& batch, Seq2SeqParams& ab, Seq2SeqParams& ba,
                                           const LmParams& lm_a, const LmParams& lm_b,
                                           const DualConfig& config, std::size_t t) {
  SideResult a = play_side('A', batch.mono_a, batch.bi_ab, ab, ba, lm_b, config, t, batch.mono_fraction);
  std::optional<SideResult> b;
  if (config.symmetric) {
    b = play_side('B', batch.mono_b, batch.bi_ba, ba, ab, lm_a, config, t, batch.mono_fraction);
  }

  const double g1 = config.gamma1.at(t);
  const double g2 = config.gamma2.at(t);
  Update up_ab, up_ba;
  up_ab.add(a.games.forward, g1);
  if (b) up_ab.add(b->games.backward, g2);
  if (a.has_bi) up_ab.add(a.bi_grad, a.stats.lr_bilingual);
  if (b) up_ba.add(b->games.forward, g1);
  up_ba.add(a.games.backward, g2);
  if (b && b->has_bi) up_ba.add(b->bi_grad, b->stats.lr_bilingual);
  up_ab.apply(ab);
  up_ba.apply(ba);

  std::vector<DualStepStats> out{std::move(a.stats)};
  if (b) out.push_back(std::move(b->stats));
  return out;
}

std::vector<DualStepStats> dual_step(const Sentence& s_a, const Sentence& s_b, Seq2SeqParams& ab,
                                     Seq2SeqParams& ba, const LmParams& lm_a, const LmParams& lm_b,
                                     const DualConfig& config, std::size_t t) {
  StepBatch batch;
  batch.mono_a = {s_a};
  batch.mono_b = {s_b};
  return dual_batch_step(batch, ab, ba, lm_a, lm_b, config, t);
}

namespace {

void check_vocab(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("train_dual: vocabulary mismatch: " + what);
}

}  // namespace

DualResult train_dual(const DualData& data, const Seq2SeqParams& warm_ab, const Seq2SeqParams& warm_ba,
                      const LmParams& lm_a, const LmParams& lm_b, const DualConfig& config, Rng& rng,
                      const DualCallbacks& callbacks) {
  config.validate();
  const std::size_t va = warm_ab.dims.src_vocab;
  const std::size_t vb = warm_ab.dims.tgt_vocab;
  check_vocab(warm_ba.dims.src_vocab == vb && warm_ba.dims.tgt_vocab == va,
              "the two models are not inverse in vocabulary sizes");
  check_vocab(lm_a.dims.vocab == va, "LM_A vocabulary differs from the A side of the models");
  check_vocab(lm_b.dims.vocab == vb, "LM_B vocabulary differs from the B side of the models");
  for (const auto& s : data.mono_a.sentences) validate_sentence(s, va, "train_dual mono A");
  for (const auto& s : data.mono_b.sentences) validate_sentence(s, vb, "train_dual mono B");
  for (const auto* corpus : {&data.bilingual, &data.valid}) {
    for (const auto& p : corpus->pairs) {
      validate_sentence(p.source, va, "train_dual bilingual A side");
      validate_sentence(p.target, vb, "train_dual bilingual B side");
    }
  }

  DualResult result{warm_ab, warm_ba, {}, std::nullopt, std::nullopt, 0, 0.0, 0.0, 0};
  if (config.max_steps == 0) return result;
  if (data.mono_a.empty() || data.mono_b.empty()) {
    throw std::invalid_argument("train_dual: empty monolingual corpus");
  }

  const bool validating = config.eval_every > 0;
  if (validating && data.valid.empty()) throw std::invalid_argument("train_dual: empty validation corpus");

  BilingualCorpus valid_ab = data.valid;
  if (config.max_valid > 0 && valid_ab.pairs.size() > config.max_valid) valid_ab.pairs.resize(config.max_valid);
  const BilingualCorpus valid_ba = swap_sides(valid_ab);
  const BilingualCorpus bi_ba = swap_sides(data.bilingual);

  Rng rng_a = rng.split("dual-batch-a");
  Rng rng_b = rng.split("dual-batch-b");

  Seq2SeqParams ab = warm_ab;
  Seq2SeqParams ba = warm_ba;

  auto validate_models = [&]() {
    return std::pair{evaluate_bleu(beam_translator(ab, config.eval_beam, config.eval_max_len), valid_ab).bleu,
                     evaluate_bleu(beam_translator(ba, config.eval_beam, config.eval_max_len), valid_ba).bleu};
  };

  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  if (validating) {
    const auto [bab, bba] = validate_models();
    result.warm_val_bleu_ab = bab;
    result.warm_val_bleu_ba = bba;
    result.best_val_bleu_ab = bab;
    result.best_val_bleu_ba = bba;
    best = 0.5 * (bab + bba);
    if (callbacks.on_checkpoint) callbacks.on_checkpoint(0, ab, ba, bab, bba, true);
  }

  for (std::size_t t = 0; t < config.max_steps; ++t) {
    const MixedBatch mixed_a = soft_landing_batch(data.mono_a, data.bilingual, t, config.soft_landing, config.batch, rng_a);
    const MixedBatch mixed_b = soft_landing_batch(data.mono_b, bi_ba, t, config.soft_landing, config.batch, rng_b);
    StepBatch batch;
    batch.mono_fraction = mixed_a.mono_fraction;
    for (const auto& item : mixed_a.items) {
      if (const auto* m = std::get_if<MonoItem>(&item)) batch.mono_a.push_back(m->sentence);
      else batch.bi_ab.push_back(std::get<BiItem>(item).pair);
    }
    for (const auto& item : mixed_b.items) {
      if (const auto* m = std::get_if<MonoItem>(&item)) batch.mono_b.push_back(m->sentence);
      else batch.bi_ba.push_back(std::get<BiItem>(item).pair);
    }

    auto stats = dual_batch_step(batch, ab, ba, lm_a, lm_b, config, t);
    if (!ab.store.all_finite() || !ba.store.all_finite()) {
      throw NumericError("train_dual: non-finite parameters after step " + std::to_string(t));
    }
    result.steps = t + 1;

    bool stop = false;
    if (validating && (t + 1) % config.eval_every == 0) {
      const auto [bab, bba] = validate_models();
      for (auto& s : stats) {
        s.val_bleu_ab = bab;
        s.val_bleu_ba = bba;
      }
      const double score = 0.5 * (bab + bba);
      const bool improved = score > best;
      if (improved) {
        best = score;
        result.ab = ab;
        result.ba = ba;
        result.best_step = t + 1;
        result.best_val_bleu_ab = bab;
        result.best_val_bleu_ba = bba;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        stop = true;
      }
      if (callbacks.on_checkpoint) callbacks.on_checkpoint(t + 1, ab, ba, bab, bba, improved);
    }
    for (auto& s : stats) {
      if (callbacks.on_stats) callbacks.on_stats(s);
      result.log.push_back(std::move(s));
    }
    if (stop) break;
  }
  if (!validating) {
    result.ab = ab;
    result.ba = ba;
    result.best_step = result.steps;
  }
  return result;
}

}  // namespace dualoop
