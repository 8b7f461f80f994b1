#include "dualoop/corpus/corpus.hpp"
#include "dualoop/corpus/synth.hpp"
#include "dualoop/corpus/vocab.hpp"
#include "dualoop/evalkit/bleu.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace dualoop;

TEST(Vocab, FrequencyRankingAndTies) {
  const auto v1 = build_vocab({"a a b"}, 1);
  EXPECT_EQ(v1.size(), 5u);
  EXPECT_EQ(encode(v1, "b"), (Sentence{kUnk}));
  EXPECT_EQ(v1.id("a"), 4);
  const auto v2 = build_vocab({"x y", "y"}, 2);
  EXPECT_EQ(v2.corpus_tokens(), (std::vector<std::string>{"y", "x"}));
  const auto v3 = build_vocab({"b a"}, 5);
  EXPECT_EQ(v3.corpus_tokens(), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(build_vocab({}, 3), std::invalid_argument);
  EXPECT_THROW(build_vocab({"a"}, 0), std::invalid_argument);
}

TEST(Vocab, PermutationInvariantAndReservedNeverCollide) {
  std::vector<std::string> raw{"c b a", "a b", "d <UNK> a", "</s> e"};
  const auto v = build_vocab(raw, 10);
  std::reverse(raw.begin(), raw.end());
  EXPECT_EQ(build_vocab(raw, 10), v);
  for (const auto& t : v.corpus_tokens()) EXPECT_FALSE(is_reserved_token(t));
  for (TokenId id = kNumReserved; id < static_cast<TokenId>(v.size()); ++id) EXPECT_EQ(v.id(v.token(id)), id);
}

TEST(Vocab, EncodeDecode) {
  const auto v = build_vocab({"a b c"}, 10);
  EXPECT_EQ(decode(v, encode(v, "c a b")), "c a b");
  EXPECT_EQ(encode(v, "a z"), (Sentence{v.id("a"), kUnk}));
  EXPECT_EQ(decode(v, {kUnk}), "<UNK>");
  EXPECT_THROW(encode(v, ""), std::invalid_argument);
  EXPECT_THROW(encode(v, "   "), std::invalid_argument);
  EXPECT_THROW((void)v.token(99), std::out_of_range);
}

TEST(Vocab, FileRoundTrip) {
  const auto dir = fixture::temp_dir("vocab");
  const auto v = build_vocab({"q w e w"}, 10);
  save_vocab(dir / "v.txt", v);
  EXPECT_EQ(load_vocab(dir / "v.txt"), v);
}

TEST(Corpus, FilterRules) {
  MonolingualCorpus c{"A", {{4, 5}, Sentence(51, 4), {4, kUnk}, {5}}};
  const auto same = filter_corpus(MonolingualCorpus{"A", {{4, 5}, {5}}}, 50, true);
  EXPECT_EQ(same.sentences.size(), 2u);
  const auto f = filter_corpus(c, 50, false);
  EXPECT_EQ(f.sentences, (std::vector<Sentence>{{4, 5}, {4, kUnk}, {5}}));
  const auto g = filter_corpus(c, 50, true);
  EXPECT_EQ(g.sentences, (std::vector<Sentence>{{4, 5}, {5}}));
  EXPECT_EQ(filter_corpus(g, 50, true).sentences, g.sentences);
  BilingualCorpus bi{{{{4}, {5}}, {{4}, Sentence(3, 5)}}};
  EXPECT_EQ(filter_corpus(bi, 2, false).size(), 1u);
}

TEST(Corpus, SubsampleSizesAndDeterminism) {
  BilingualCorpus c;
  for (int i = 0; i < 1000; ++i) c.pairs.push_back({{4 + i % 7}, {4 + i % 5, 4}});
  EXPECT_EQ(subsample_bilingual(c, 0.1, 3).size(), 100u);
  EXPECT_EQ(subsample_bilingual(c, 0.1, 3).pairs, subsample_bilingual(c, 0.1, 3).pairs);
  const auto full = subsample_bilingual(c, 1.0, 4);
  EXPECT_EQ(full.size(), 1000u);
  auto key = [](const SentencePair& p) { return std::make_pair(p.source, p.target); };
  std::multiset<std::pair<Sentence, Sentence>> a, b;
  for (const auto& p : c.pairs) a.insert(key(p));
  for (const auto& p : full.pairs) b.insert(key(p));
  EXPECT_EQ(a, b);
  EXPECT_THROW(subsample_bilingual(c, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(subsample_bilingual(c, 1.5, 1), std::invalid_argument);
}

TEST(Corpus, BilingualFilesRoundTrip) {
  const auto dir = fixture::temp_dir("bi");
  const auto va = build_vocab({"a b c"}, 10), vb = build_vocab({"x y"}, 10);
  BilingualCorpus c{{{encode(va, "a b"), encode(vb, "y x")}, {encode(va, "c"), encode(vb, "x")}}};
  save_bilingual(dir / "train", c, va, vb);
  EXPECT_TRUE(std::filesystem::exists(dir / "train.a"));
  EXPECT_TRUE(std::filesystem::exists(dir / "train.b"));
  EXPECT_EQ(load_bilingual(dir / "train", va, vb).pairs, c.pairs);
  EXPECT_THROW(load_mono(dir / "missing", va, "A"), std::runtime_error);
}

TEST(Reordering, InverseRestores) {
  const std::vector<int> s{1, 2, 3, 4, 5};
  for (auto r : {Reordering::Reverse, Reordering::RotateK, Reordering::SwapAdjacent}) {
    for (std::size_t k : {0u, 1u, 2u, 7u}) {
      EXPECT_EQ(invert_reordering(apply_reordering(s, r, k), r, k), s);
    }
  }
  EXPECT_EQ(apply_reordering(s, Reordering::Reverse, 0), (std::vector<int>{5, 4, 3, 2, 1}));
  EXPECT_EQ(apply_reordering(s, Reordering::SwapAdjacent, 0), (std::vector<int>{2, 1, 4, 3, 5}));
}

namespace {

SynthLangSpec tiny_spec(double noise = 0.0) {
  SynthLangSpec s;
  s.vocab_size = 20;
  s.n_bilingual = 300;
  s.n_mono_a = 400;
  s.n_mono_b = 400;
  s.n_valid = 50;
  s.n_test = 50;
  s.noise_rate = noise;
  return s;
}

}  // namespace

TEST(Synth, NoiseFreeMapReproducesPairsAndInverts) {
  const auto d = gen_language_pair(tiny_spec(), 5);
  for (const auto* c : {&d.train, &d.valid, &d.test}) {
    for (const auto& p : c->pairs) {
      EXPECT_EQ(d.map.a_to_b(p.source, d.vocab_a, d.vocab_b), p.target);
      EXPECT_EQ(d.map.b_to_a(p.target, d.vocab_a, d.vocab_b), p.source);
    }
  }
  std::vector<Sentence> hyps, refs;
  for (const auto& p : d.test.pairs) {
    hyps.push_back(d.map.a_to_b(p.source, d.vocab_a, d.vocab_b));
    refs.push_back(p.target);
  }
  EXPECT_DOUBLE_EQ(corpus_bleu(hyps, refs).bleu, 100.0);
}

TEST(Synth, DeterministicDisjointAndInVocabulary) {
  const auto a = gen_language_pair(tiny_spec(0.1), 11);
  const auto b = gen_language_pair(tiny_spec(0.1), 11);
  EXPECT_EQ(a.train.pairs, b.train.pairs);
  EXPECT_EQ(a.mono_a.sentences, b.mono_a.sentences);
  EXPECT_EQ(a.mono_b.sentences, b.mono_b.sentences);
  EXPECT_EQ(a.test.pairs, b.test.pairs);

  std::set<Sentence> reserved_a, reserved_b;
  for (const auto* c : {&a.train, &a.valid, &a.test}) {
    for (const auto& p : c->pairs) {
      EXPECT_TRUE(reserved_a.insert(p.source).second) << "duplicate A sentence across splits";
      reserved_b.insert(p.target);
    }
  }
  for (const auto& s : a.mono_a.sentences) {
    EXPECT_FALSE(reserved_a.contains(s));
    EXPECT_FALSE(contains_unk(s));
    EXPECT_EQ(encode(a.vocab_a, decode(a.vocab_a, s)), s);
  }
  for (const auto& s : a.mono_b.sentences) {
    EXPECT_FALSE(reserved_b.contains(s));
    EXPECT_FALSE(contains_unk(s));
  }
  EXPECT_EQ(a.mono_a.language, "A");
}

TEST(Synth, NoiseChangesSomeTargets) {
  const auto d = gen_language_pair(tiny_spec(0.3), 2);
  std::size_t differ = 0;
  for (const auto& p : d.train.pairs) differ += d.map.a_to_b(p.source, d.vocab_a, d.vocab_b) != p.target;
  EXPECT_GT(differ, 0u);
}

TEST(Synth, CapacityErrorAndSpecText) {
  auto s = tiny_spec();
  s.vocab_size = 2;
  s.successors = 2;
  s.min_len = 3;
  s.max_len = 3;
  EXPECT_THROW(gen_language_pair(s, 1), std::invalid_argument);
  const auto t = tiny_spec(0.25);
  const auto back = spec_from_text(spec_to_text(t));
  EXPECT_EQ(spec_to_text(back), spec_to_text(t));
  EXPECT_THROW(spec_from_text("bogus_key=1\n"), std::invalid_argument);
}

TEST(Synth, MapTsvRoundTrip) {
  const auto d = gen_language_pair(tiny_spec(), 3);
  const auto back = GroundTruthMap::from_tsv(d.map.to_tsv());
  EXPECT_EQ(back.to_tsv(), d.map.to_tsv());
}

TEST(Markov, LengthAndSentenceProbabilitiesNormalize) {
  SynthLangSpec s;
  s.vocab_size = 5;
  s.successors = 2;
  s.min_len = 1;
  s.max_len = 4;
  MarkovSource src(s, 4);
  double total_len = 0.0;
  for (std::size_t l = 1; l <= 4; ++l) total_len += src.length_prob(l);
  EXPECT_NEAR(total_len, 1.0, 1e-12);
  double mass = 0.0;
  std::vector<std::vector<std::size_t>> frontier{{}};
  for (std::size_t l = 1; l <= 4; ++l) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& p : frontier) {
      for (std::size_t t = 0; t < 5; ++t) {
        auto e = p;
        e.push_back(t);
        next.push_back(e);
        const double lp = src.log_prob(e);
        if (std::isfinite(lp)) mass += std::exp(lp);
      }
    }
    frontier = next;
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
}
