#include "dualoop/seq2seq/beam.hpp"
#include "dualoop/seq2seq/model.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace dualoop;

namespace {

struct Scored {
  Sentence tokens;
  double log_prob;
};

std::vector<Scored> brute_force(const Seq2SeqParams& p, const Sentence& src, std::size_t max_len) {
  std::vector<Scored> all;
  for (const auto& s : oracle::all_sequences(p.dims.tgt_vocab, max_len)) {
    all.push_back({s, oracle::seq2seq_log_prob(p.store, src, s)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return shortlex_less(a.tokens, b.tokens);
  });
  return all;
}

double prefix_log_prob(const Seq2SeqParams& p, const EncoderStates& enc, const Sentence& prefix) {
  DecoderState st = initial_decoder_state(p, enc);
  double lp = 0.0;
  for (TokenId y : prefix) {
    auto step = decode_step(p, st, enc);
    lp += std::log(step.probs[y]);
    st = step.next;
    st.last = y;
  }
  return lp;
}

}  // namespace

TEST(Seq2Seq, LogProbMatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = fixture::tiny_seq2seq(seed);
    Rng rng(seed + 1000);
    for (int k = 0; k < 5; ++k) {
      const Sentence src = fixture::random_sentence(rng, 7, 1, 6);
      const Sentence tgt = fixture::random_sentence(rng, 6, 1, 6);
      EXPECT_NEAR(sequence_log_prob(p, src, tgt), oracle::seq2seq_log_prob(p.store, src, tgt), 1e-11);
    }
  }
}

TEST(Seq2Seq, StepDistributionsNormalizeAndMaskFirstEos) {
  const auto p = fixture::tiny_seq2seq(3);
  const auto enc = encode_source(p, {4, 5, 6});
  DecoderState st = initial_decoder_state(p, enc);
  for (int t = 0; t < 4; ++t) {
    const auto step = decode_step(p, st, enc);
    EXPECT_NEAR(step.probs.sum(), 1.0, 1e-12);
    EXPECT_NEAR(step.attn_weights.sum(), 1.0, 1e-12);
    if (t == 0) {
      EXPECT_EQ(step.probs[kEos], 0.0);
    } else {
      EXPECT_GT(step.probs[kEos], 0.0);
    }
    st = step.next;
    st.last = 4;
  }
}

TEST(Seq2Seq, RejectsBadInputs) {
  const auto p = fixture::tiny_seq2seq(1);
  EXPECT_THROW(sequence_log_prob(p, {}, {4}), std::invalid_argument);
  EXPECT_THROW(sequence_log_prob(p, {4}, {}), std::invalid_argument);
  EXPECT_THROW(sequence_log_prob(p, {4}, {4, kEos}), std::invalid_argument);
  EXPECT_THROW(sequence_log_prob(p, {40}, {4}), std::invalid_argument);
  EXPECT_THROW(sequence_log_prob(p, {4}, {6}), std::invalid_argument);
}

TEST(Seq2Seq, GradientPassesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = fixture::tiny_seq2seq(seed);
    Rng rng(seed + 77);
    const Sentence src = fixture::random_sentence(rng, 7, 1, 5);
    const Sentence tgt = fixture::random_sentence(rng, 6, 1, 5);
    const ParamStore g = log_prob_gradient(p, src, tgt);
    auto f = [&](const ParamStore& s) { return sequence_log_prob({p.dims, s}, src, tgt); };
    const auto report = grad_check(f, g, p.store, fixture::fd_options());
    EXPECT_TRUE(report.pass) << "seed " << seed << ": " << report.worst_param << "(" << report.worst_row
                             << "," << report.worst_col << ") rel " << report.max_rel_error;
    EXPECT_EQ(report.params.size(), 14u);
  }
}

TEST(Seq2Seq, AccumulateScalesAndAdds) {
  const auto p = fixture::tiny_seq2seq(4);
  ParamStore g = p.store.zeros_like();
  const double lp = accumulate_log_prob_gradient(p, {4, 5}, {3, 4}, 2.0, g);
  accumulate_log_prob_gradient(p, {4, 5}, {3, 4}, -1.0, g);
  EXPECT_NEAR(lp, sequence_log_prob(p, {4, 5}, {3, 4}), 1e-12);
  const ParamStore single = log_prob_gradient(p, {4, 5}, {3, 4});
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_LT((g.entry(i).value - single.entry(i).value).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Seq2Seq, ProbabilityMassIsOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = fixture::tiny_seq2seq(seed, 5, 4, 4, 5, 3);
    const Sentence src{4, 3, 4};
    const auto enc = encode_source(p, src);
    const std::size_t L = 3;
    double complete = 0.0, residual = 0.0;
    for (const auto& s : oracle::all_sequences(4, L)) {
      complete += std::exp(sequence_log_prob(p, src, s));
      if (s.size() == L) residual += std::exp(prefix_log_prob(p, enc, s)) - std::exp(sequence_log_prob(p, src, s));
    }
    EXPECT_NEAR(complete + residual, 1.0, 1e-9);
  }
}

TEST(Beam, FullWidthMatchesBruteForceForEveryK) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = fixture::tiny_seq2seq(seed, 6, 5, 4, 5, 3, 1.5);
    const Sentence src{4, 5, 3};
    const auto expected = brute_force(p, src, 3);
    ASSERT_EQ(expected.size(), 84u);
    const auto beam = beam_search(p, src, 84, 3);
    ASSERT_EQ(beam.size(), 84u);
    for (std::size_t k = 0; k < 84; ++k) {
      EXPECT_EQ(beam[k].tokens, expected[k].tokens) << "seed " << seed << " rank " << k;
      EXPECT_NEAR(beam[k].log_prob, expected[k].log_prob, 1e-10);
      EXPECT_TRUE(beam[k].terminated);
    }
  }
}

TEST(Beam, UniformModelTiesBreakShortlex) {
  const auto p = zero_seq2seq({5, 5, 3, 4, 3});
  const auto beam = beam_search(p, {4}, 84, 3);
  const auto expected = brute_force(p, {4}, 3);
  ASSERT_EQ(beam.size(), 84u);
  for (std::size_t k = 0; k < 84; ++k) EXPECT_EQ(beam[k].tokens, expected[k].tokens) << k;
  EXPECT_EQ(beam[0].tokens, (Sentence{0}));
  EXPECT_EQ(beam[1].tokens, (Sentence{1}));
  EXPECT_NEAR(beam[0].log_prob, -std::log(4.0) - std::log(5.0), 1e-12);
}

TEST(Beam, NarrowBeamReturnsSortedExactScores) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = fixture::tiny_seq2seq(seed, 6, 5, 4, 5, 3, 1.5);
    const Sentence src{3, 4};
    for (std::size_t width = 1; width <= 6; ++width) {
      const auto beam = beam_search(p, src, width, 3);
      ASSERT_FALSE(beam.empty());
      EXPECT_LE(beam.size(), width);
      for (std::size_t k = 0; k < beam.size(); ++k) {
        EXPECT_NEAR(beam[k].log_prob, sequence_log_prob(p, src, beam[k].tokens), 1e-10);
        if (k > 0) {
          EXPECT_GE(beam[k - 1].log_prob, beam[k].log_prob);
        }
      }
    }
    EXPECT_EQ(beam_search(p, src, 3, 3).front().tokens, beam_search(p, src, 3, 3).front().tokens);
  }
}

TEST(Beam, WidthOneOnPeakedModelFindsArgmax) {
  const auto p = fixture::tiny_seq2seq(9, 6, 5, 4, 5, 3, 1.5);
  const auto expected = brute_force(p, {4}, 3);
  const auto all = beam_search(p, {4}, 84, 3);
  EXPECT_EQ(all.front().tokens, expected.front().tokens);
}

TEST(Beam, RejectsZeroWidth) {
  const auto p = fixture::tiny_seq2seq(1);
  EXPECT_THROW(beam_search(p, {4}, 0, 3), std::invalid_argument);
  EXPECT_THROW(beam_search(p, {4}, 2, 0), std::invalid_argument);
}

TEST(Seq2Seq, GreedyAndSampleProduceValidSentences) {
  const auto p = fixture::tiny_seq2seq(5);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Sentence s = sample_translation(p, {4, 5}, 6, rng);
    EXPECT_GE(s.size(), 1u);
    EXPECT_LE(s.size(), 6u);
    EXPECT_EQ(std::count(s.begin(), s.end(), kEos), 0);
  }
  const Sentence g = greedy_decode(p, {4, 5}, 6);
  EXPECT_GE(g.size(), 1u);
  Rng a(9), b(9);
  EXPECT_EQ(sample_translation(p, {4}, 6, a), sample_translation(p, {4}, 6, b));
}

TEST(Seq2Seq, CheckpointRoundTrip) {
  const auto dir = fixture::temp_dir("seq2seq_ckpt");
  const auto p = fixture::tiny_seq2seq(2);
  save_seq2seq(dir / "m", p);
  const auto q = load_seq2seq(dir / "m");
  EXPECT_EQ(q.dims, p.dims);
  EXPECT_EQ(q.store, p.store);
  EXPECT_TRUE(std::filesystem::exists(dir / "m.meta"));
}
