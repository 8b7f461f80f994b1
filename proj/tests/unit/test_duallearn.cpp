#include "dualoop/duallearn/rewards.hpp"
#include "dualoop/duallearn/soft_landing.hpp"
#include "dualoop/duallearn/trainer.hpp"
#include "dualoop/numerics/optim.hpp"
#include "dualoop/seq2seq/beam.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace dualoop;

namespace {

// A has 6 ids, B has 4 (three non-EOS outputs): 39 middle sequences up to length 3.
struct Tiny {
  Seq2SeqParams ab = fixture::tiny_seq2seq(1, 6, 4, 4, 5, 3, 1.0);
  Seq2SeqParams ba = fixture::tiny_seq2seq(2, 4, 6, 4, 5, 3, 1.0);
  LmParams lm_a = fixture::tiny_lm(3, 6, 4, 5);
  LmParams lm_b = fixture::tiny_lm(4, 4, 4, 5);
};

}  // namespace

TEST(Rewards, MixingIdentityAndDegenerateAlphas) {
  Tiny t;
  const Sentence s{4, 5};
  const std::vector<Sentence> mids{{3}, {0, 3}, {1, 1, 3}};
  for (double alpha : {0.0, 0.005, 0.5, 1.0}) {
    const auto r = compute_rewards(s, mids, t.lm_b, t.ba, alpha);
    ASSERT_EQ(r.size(), 3u);
    for (const auto& x : r) {
      EXPECT_EQ(x.r, alpha * x.r1 + (1.0 - alpha) * x.r2);
      EXPECT_EQ(x.r1, lm_score(t.lm_b, mids[x.k]));
      EXPECT_EQ(x.r2, sequence_log_prob(t.ba, mids[x.k], s));
      if (alpha == 0.0) {
        EXPECT_EQ(x.r, x.r2);
      }
      if (alpha == 1.0) {
        EXPECT_EQ(x.r, x.r1);
      }
    }
  }
  EXPECT_THROW(compute_rewards(s, {}, t.lm_b, t.ba, 0.5), std::invalid_argument);
  RewardBreakdown hand{0, -1.0, -3.0, 0.5 * -1.0 + 0.5 * -3.0, 0.5};
  EXPECT_EQ(hand.r, -2.0);
}

TEST(PolicyGradient, ExactExpectationMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 1; ++seed) {
    const auto ab = fixture::tiny_seq2seq(10 + seed, 6, 4, 4, 5, 3, 1.0);
    const auto ba = fixture::tiny_seq2seq(20 + seed, 4, 6, 4, 5, 3, 1.0);
    const auto lm = fixture::tiny_lm(30 + seed, 4, 4, 5);
    const Sentence s{4, 5, 1};
    const auto mids = enumerate_sequences(4, 3);
    ASSERT_EQ(mids.size(), 39u);
    for (double alpha : {0.0, 0.005, 0.5, 1.0}) {
      const auto rewards = compute_rewards(s, mids, lm, ba, alpha);
      const auto g = policy_gradients(s, mids, rewards, ab, ba, alpha, EstimatorMode::ExactExpectation, 3);
      auto f_ab = [&](const ParamStore& st) { return expected_reward(s, {ab.dims, st}, ba, lm, alpha, 3); };
      auto f_ba = [&](const ParamStore& st) { return expected_reward(s, ab, {ba.dims, st}, lm, alpha, 3); };
      const auto rep_ab = grad_check(f_ab, g.forward, ab.store, fixture::fd_options());
      EXPECT_TRUE(rep_ab.pass) << "alpha " << alpha << " " << rep_ab.worst_param << " " << rep_ab.max_rel_error;
      if (alpha == 1.0) {
        EXPECT_EQ(g.backward.squared_norm(), 0.0);
      } else {
        const auto rep_ba = grad_check(f_ba, g.backward, ba.store, fixture::fd_options());
        EXPECT_TRUE(rep_ba.pass) << "alpha " << alpha << " " << rep_ba.worst_param << " " << rep_ba.max_rel_error;
      }
    }
  }
}

TEST(PolicyGradient, ModeMismatchIsAnError) {
  Tiny t;
  const Sentence s{4};
  const std::vector<Sentence> mids{{3}, {0}};
  const auto r = compute_rewards(s, mids, t.lm_b, t.ba, 0.5);
  EXPECT_THROW(policy_gradients(s, mids, r, t.ab, t.ba, 0.5, EstimatorMode::ExactExpectation, 3),
               std::invalid_argument);
  EXPECT_THROW(policy_gradients(s, {{3}}, r, t.ab, t.ba, 0.5, EstimatorMode::BeamAverage, 3),
               std::invalid_argument);
}

TEST(PolicyGradient, BeamAverageFormula) {
  Tiny t;
  const Sentence s{4, 5};
  const std::vector<Sentence> mids{{3, 0}, {1}};
  const double alpha = 0.3;
  const auto r = compute_rewards(s, mids, t.lm_b, t.ba, alpha);
  const auto g = policy_gradients(s, mids, r, t.ab, t.ba, alpha, EstimatorMode::BeamAverage, 3);
  ParamStore want_f = t.ab.store.zeros_like(), want_b = t.ba.store.zeros_like();
  for (std::size_t k = 0; k < 2; ++k) {
    want_f.add_scaled(log_prob_gradient(t.ab, s, mids[k]), 0.5 * r[k].r);
    want_b.add_scaled(log_prob_gradient(t.ba, mids[k], s), 0.5 * (1.0 - alpha));
  }
  for (std::size_t i = 0; i < want_f.size(); ++i) {
    EXPECT_LT((g.forward.entry(i).value - want_f.entry(i).value).cwiseAbs().maxCoeff(), 1e-13);
  }
  for (std::size_t i = 0; i < want_b.size(); ++i) {
    EXPECT_LT((g.backward.entry(i).value - want_b.entry(i).value).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(PolicyGradient, IdenticalCandidatesEqualSingleCandidate) {
  Tiny t;
  const Sentence s{4, 5};
  const std::vector<Sentence> one{{3, 1}}, three{{3, 1}, {3, 1}, {3, 1}};
  const auto g1 = policy_gradients(s, one, compute_rewards(s, one, t.lm_b, t.ba, 0.2), t.ab, t.ba, 0.2,
                                   EstimatorMode::BeamAverage, 3);
  const auto g3 = policy_gradients(s, three, compute_rewards(s, three, t.lm_b, t.ba, 0.2), t.ab, t.ba, 0.2,
                                   EstimatorMode::BeamAverage, 3);
  for (std::size_t i = 0; i < g1.forward.size(); ++i) {
    EXPECT_LT((g1.forward.entry(i).value - g3.forward.entry(i).value).cwiseAbs().maxCoeff(), 1e-13);
  }
  for (std::size_t i = 0; i < g1.backward.size(); ++i) {
    EXPECT_LT((g1.backward.entry(i).value - g3.backward.entry(i).value).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(SoftLanding, ScheduleAndCounts) {
  SoftLandingSchedule s;
  s.ramp_steps = 100;
  EXPECT_DOUBLE_EQ(s.mono_fraction(0), 0.5);
  EXPECT_DOUBLE_EQ(s.mono_fraction(100), 1.0);
  EXPECT_DOUBLE_EQ(s.mono_fraction(1000), 1.0);
  double prev = 0.0;
  for (std::size_t t = 0; t < 150; ++t) {
    EXPECT_GE(s.mono_fraction(t), prev);
    prev = s.mono_fraction(t);
  }
  MonolingualCorpus mono{"A", {{4}, {5}, {6}}};
  BilingualCorpus bi{{{{4}, {5}}, {{5}, {4}}}};
  Rng rng(1);
  const auto b0 = soft_landing_batch(mono, bi, 0, s, 10, rng);
  EXPECT_EQ(b0.n_mono, 5u);
  EXPECT_EQ(b0.n_bi, 5u);
  const auto end = soft_landing_batch(mono, bi, 100, s, 10, rng);
  EXPECT_EQ(end.n_mono, 10u);
  EXPECT_EQ(end.n_bi, 0u);
  SoftLandingSchedule fixed;
  fixed.initial_fraction = 0.7;
  fixed.final_fraction = 0.7;
  const auto b7 = soft_landing_batch(mono, bi, 3, fixed, 10, rng);
  EXPECT_EQ(b7.n_mono, 7u);
  EXPECT_EQ(b7.n_bi, 3u);
  EXPECT_EQ(b7.items.size(), 10u);
  EXPECT_TRUE(std::holds_alternative<MonoItem>(b7.items[6]));
  EXPECT_TRUE(std::holds_alternative<BiItem>(b7.items[7]));
  EXPECT_THROW(soft_landing_batch(MonolingualCorpus{"A", {}}, bi, 0, s, 10, rng), std::invalid_argument);
  EXPECT_THROW(soft_landing_batch(mono, bi, 0, s, 0, rng), std::invalid_argument);
  Rng r1(4), r2(4);
  const auto x = soft_landing_batch(mono, bi, 10, s, 8, r1);
  const auto y = soft_landing_batch(mono, bi, 10, s, 8, r2);
  ASSERT_EQ(x.items.size(), y.items.size());
  for (std::size_t i = 0; i < x.items.size(); ++i) EXPECT_EQ(x.items[i].index(), y.items[i].index());
}

namespace {

DualConfig test_config() {
  DualConfig c;
  c.K = 2;
  c.max_mid_len = 4;
  c.alpha = 0.3;
  c.gamma1 = {0.05};
  c.gamma2 = {0.1};
  c.eval_beam = 2;
  c.eval_max_len = 6;
  return c;
}

}  // namespace

TEST(DualStep, ZeroLearningRatesLeaveModels) {
  Tiny t;
  auto cfg = test_config();
  cfg.gamma1 = {0.0};
  cfg.gamma2 = {0.0};
  auto ab = t.ab, ba = t.ba;
  const auto stats = dual_step({4, 5}, {3, 0}, ab, ba, t.lm_a, t.lm_b, cfg, 0);
  EXPECT_EQ(ab.store, t.ab.store);
  EXPECT_EQ(ba.store, t.ba.store);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].direction, 'A');
  EXPECT_EQ(stats[1].direction, 'B');
}

TEST(DualStep, SingleGameMatchesHandComposition) {
  Tiny t;
  auto cfg = test_config();
  cfg.K = 1;
  cfg.symmetric = false;
  cfg.grad_clip = 0.0;
  const Sentence s{4, 5, 1};
  auto ab = t.ab, ba = t.ba;
  dual_step(s, {3}, ab, ba, t.lm_a, t.lm_b, cfg, 0);

  const Sentence mid = beam_search(t.ab, s, 1, cfg.max_mid_len).front().tokens;
  const double r = cfg.alpha * lm_score(t.lm_b, mid) + (1.0 - cfg.alpha) * sequence_log_prob(t.ba, mid, s);
  ParamStore g_ab = log_prob_gradient(t.ab, s, mid);
  g_ab.scale(r);
  ParamStore g_ba = log_prob_gradient(t.ba, mid, s);
  g_ba.scale(1.0 - cfg.alpha);
  const ParamStore want_ab = sgd_update(t.ab.store, g_ab, cfg.gamma1.base);
  const ParamStore want_ba = sgd_update(t.ba.store, g_ba, cfg.gamma2.base);
  for (std::size_t i = 0; i < want_ab.size(); ++i) {
    EXPECT_LT((ab.store.entry(i).value - want_ab.entry(i).value).cwiseAbs().maxCoeff(), 1e-15);
  }
  for (std::size_t i = 0; i < want_ba.size(); ++i) {
    EXPECT_LT((ba.store.entry(i).value - want_ba.entry(i).value).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(DualStep, RelabelingSymmetryIsExact) {
  // Same vocabulary sizes on both sides so the models can swap roles.
  const auto ab0 = fixture::tiny_seq2seq(7, 6, 6, 4, 5, 3, 1.0);
  const auto ba0 = fixture::tiny_seq2seq(8, 6, 6, 4, 5, 3, 1.0);
  const auto lm_a = fixture::tiny_lm(9, 6, 4, 5), lm_b = fixture::tiny_lm(10, 6, 4, 5);
  auto cfg = test_config();
  cfg.grad_clip = 0.5;
  StepBatch batch;
  batch.mono_a = {{4, 5}, {5, 1, 4}};
  batch.mono_b = {{3, 0}, {4}};
  batch.bi_ab = {{{4, 4}, {5, 3}}};
  batch.bi_ba = {{{1, 5}, {0}}};
  StepBatch mirror;
  mirror.mono_a = batch.mono_b;
  mirror.mono_b = batch.mono_a;
  mirror.bi_ab = batch.bi_ba;
  mirror.bi_ba = batch.bi_ab;

  auto ab = ab0, ba = ba0;
  const auto s1 = dual_batch_step(batch, ab, ba, lm_a, lm_b, cfg, 0);
  auto ab_m = ba0, ba_m = ab0;  // the mirrored world's "AB" model is our BA
  const auto s2 = dual_batch_step(mirror, ab_m, ba_m, lm_b, lm_a, cfg, 0);
  EXPECT_EQ(ab.store, ba_m.store);
  EXPECT_EQ(ba.store, ab_m.store);
  EXPECT_EQ(s1[0].mean_r, s2[1].mean_r);
  EXPECT_EQ(s1[0].grad_norm_ab, s2[1].grad_norm_ba);
}

TEST(DualStep, ClippingBoundsEachUpdate) {
  Tiny t;
  auto cfg = test_config();
  cfg.symmetric = false;
  cfg.grad_clip = 1e-3;
  cfg.gamma1 = {1.0};
  cfg.gamma2 = {0.0};
  auto ab = t.ab, ba = t.ba;
  const auto st = dual_step({4, 5}, {3}, ab, ba, t.lm_a, t.lm_b, cfg, 0);
  ParamStore diff = ab.store;
  diff.add_scaled(t.ab.store, -1.0);
  EXPECT_LE(std::sqrt(diff.squared_norm()), 1e-3 * (1 + 1e-12));
  EXPECT_TRUE(st[0].clipped);
}

namespace {

struct TinyData {
  MonolingualCorpus mono_a{"A", {{4, 5}, {5, 4, 4}, {1, 5}, {4}, {5, 5}}};
  MonolingualCorpus mono_b{"B", {{3}, {0, 1}, {1, 3, 3}, {3, 0}}};
  BilingualCorpus bi{{{{4, 5}, {0, 3}}, {{5}, {1}}, {{4, 4}, {3, 3}}}};
  BilingualCorpus valid{{{{5, 4}, {3, 0}}, {{4, 1}, {1, 3}}}};
};

}  // namespace

TEST(TrainDual, ZeroStepsReturnWarmModels) {
  Tiny t;
  TinyData d;
  auto cfg = test_config();
  cfg.max_steps = 0;
  Rng rng(1);
  const auto res = train_dual({d.mono_a, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, t.lm_b, cfg, rng);
  EXPECT_EQ(res.ab.store, t.ab.store);
  EXPECT_EQ(res.ba.store, t.ba.store);
  EXPECT_TRUE(res.log.empty());
}

TEST(TrainDual, DeterministicAndLeavesLanguageModelsAlone) {
  Tiny t;
  TinyData d;
  auto cfg = test_config();
  cfg.max_steps = 6;
  cfg.batch = 4;
  cfg.eval_every = 3;
  cfg.soft_landing.ramp_steps = 4;
  cfg.log_rewards = true;
  const auto lm_a_before = t.lm_a.store, lm_b_before = t.lm_b.store;
  Rng r1(9), r2(9);
  std::vector<std::string> lines1, lines2;
  DualCallbacks cb1{[&](const DualStepStats& s) { lines1.push_back(to_json(s).dump()); }, {}};
  DualCallbacks cb2{[&](const DualStepStats& s) { lines2.push_back(to_json(s).dump()); }, {}};
  const auto a = train_dual({d.mono_a, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, t.lm_b, cfg, r1, cb1);
  const auto b = train_dual({d.mono_a, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, t.lm_b, cfg, r2, cb2);
  EXPECT_EQ(lines1, lines2);
  EXPECT_EQ(a.ab.store, b.ab.store);
  EXPECT_EQ(t.lm_a.store, lm_a_before);
  EXPECT_EQ(t.lm_b.store, lm_b_before);
  ASSERT_EQ(a.log.size(), 12u);
  double prev = 0.0;
  for (const auto& s : a.log) {
    EXPECT_GE(s.mono_fraction, prev);
    prev = s.mono_fraction;
    if (s.step >= 4) {
      EXPECT_EQ(s.mono_fraction, 1.0);
    }
    for (const auto& r : s.rewards) EXPECT_EQ(r.r, r.alpha * r.r1 + (1.0 - r.alpha) * r.r2);
  }
  EXPECT_EQ(a.log[0].mono_fraction, 0.5);
  EXPECT_TRUE(a.log[4].val_bleu_ab.has_value());
  EXPECT_TRUE(a.warm_val_bleu_ab.has_value());
}

TEST(TrainDual, AlphaOneNeverTouchesReconstructionModel) {
  Tiny t;
  TinyData d;
  auto cfg = test_config();
  cfg.alpha = 1.0;
  cfg.symmetric = false;
  cfg.soft_landing.bilingual_weight = 0.0;
  cfg.max_steps = 5;
  cfg.batch = 3;
  cfg.eval_every = 0;
  Rng rng(2);
  const auto res = train_dual({d.mono_a, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, t.lm_b, cfg, rng);
  EXPECT_EQ(res.ba.store, t.ba.store);
  EXPECT_FALSE(res.ab.store == t.ab.store);
}

TEST(TrainDual, VocabularyMismatchFailsBeforeTraining) {
  Tiny t;
  TinyData d;
  auto cfg = test_config();
  cfg.max_steps = 3;
  Rng rng(1);
  const auto wrong_lm = fixture::tiny_lm(5, 5, 4, 5);
  EXPECT_THROW(train_dual({d.mono_a, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, wrong_lm, cfg, rng),
               std::invalid_argument);
  MonolingualCorpus bad{"A", {{9}}};
  EXPECT_THROW(train_dual({bad, d.mono_b, d.bi, d.valid}, t.ab, t.ba, t.lm_a, t.lm_b, cfg, rng),
               std::invalid_argument);
}

TEST(DualConfig, Validation) {
  DualConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.alpha = 0.5;
  c.K = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
