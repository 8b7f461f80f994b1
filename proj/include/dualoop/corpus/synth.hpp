#pragma once

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/numerics/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dualoop {

enum class Reordering { Reverse, RotateK, SwapAdjacent };

std::string to_string(Reordering r);
Reordering parse_reordering(std::string_view s);

/// Parameters of a synthetic A/B language pair. A is an order-2 Markov
/// language; B is a token bijection of A composed with a reordering, with
/// optional uniform token noise.
struct SynthLangSpec {
  std::size_t vocab_size = 60;
  std::uint64_t bijection_seed = 7;
  Reordering reordering = Reordering::Reverse;
  std::size_t rotate_k = 1;
  double noise_rate = 0.0;
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  double geometric_p = 0.15;
  std::size_t n_bilingual = 4000;
  std::size_t n_mono_a = 20000;
  std::size_t n_mono_b = 20000;
  std::size_t n_valid = 500;
  std::size_t n_test = 500;
  /// Successor set size of each token in the Markov chain.
  std::size_t successors = 4;
  /// The token two back selects one of this many weightings of the successor set.
  std::size_t context_classes = 3;

  void validate() const;
};

/// key=value text, one per line.
std::string spec_to_text(const SynthLangSpec& spec);
SynthLangSpec spec_from_text(const std::string& text);

/// Word-order transform and its inverse.
std::vector<std::size_t> reorder_positions(std::size_t n, Reordering r, std::size_t k);
template <typename T>
std::vector<T> apply_reordering(const std::vector<T>& in, Reordering r, std::size_t k) {
  const auto pos = reorder_positions(in.size(), r, k);
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[pos[i]];
  return out;
}
template <typename T>
std::vector<T> invert_reordering(const std::vector<T>& in, Reordering r, std::size_t k) {
  const auto pos = reorder_positions(in.size(), r, k);
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[pos[i]] = in[i];
  return out;
}

/// The noise-free A<->B translation used to generate the data.
class GroundTruthMap {
 public:
  GroundTruthMap() = default;
  GroundTruthMap(std::vector<std::string> a_tokens, std::vector<std::string> b_tokens,
                 Reordering reordering, std::size_t rotate_k);

  [[nodiscard]] std::vector<std::string> a_to_b(const std::vector<std::string>& a) const;
  [[nodiscard]] std::vector<std::string> b_to_a(const std::vector<std::string>& b) const;

  /// Id-level versions; UNK and unknown tokens pass through as UNK.
  [[nodiscard]] Sentence a_to_b(const Sentence& a, const Vocabulary& va, const Vocabulary& vb) const;
  [[nodiscard]] Sentence b_to_a(const Sentence& b, const Vocabulary& va, const Vocabulary& vb) const;

  /// Two-column TSV: a_token<TAB>b_token, plus a header line naming the
  /// reordering.
  [[nodiscard]] std::string to_tsv() const;
  static GroundTruthMap from_tsv(const std::string& text);

  [[nodiscard]] const std::vector<std::string>& a_tokens() const { return a_tokens_; }
  [[nodiscard]] const std::vector<std::string>& b_tokens() const { return b_tokens_; }

 private:
  std::vector<std::string> a_tokens_;
  std::vector<std::string> b_tokens_;
  std::map<std::string, std::string, std::less<>> ab_;
  std::map<std::string, std::string, std::less<>> ba_;
  Reordering reordering_ = Reordering::Reverse;
  std::size_t rotate_k_ = 1;
};

/// Order-2 Markov source over token indices [0, V).
class MarkovSource {
 public:
  MarkovSource(const SynthLangSpec& spec, std::uint64_t seed);

  [[nodiscard]] std::vector<std::size_t> sample(Rng& rng) const;
  [[nodiscard]] double log_prob(const std::vector<std::size_t>& sentence) const;
  /// Upper-capped count of distinct sentences with positive probability.
  [[nodiscard]] double support_size(double cap = 1e18) const;

  [[nodiscard]] double length_prob(std::size_t len) const;
  [[nodiscard]] double next_prob(std::size_t prev2, bool at_start, std::size_t prev1,
                                 std::size_t next) const;
  [[nodiscard]] double start_prob(std::size_t first) const { return start_[first]; }

 private:
  [[nodiscard]] std::size_t context_class(std::size_t prev2, bool at_start) const;

  std::size_t vocab_;
  std::size_t classes_;
  std::size_t min_len_;
  std::vector<double> length_probs_;  // indexed by len - min_len
  std::vector<double> start_;
  std::vector<std::vector<std::size_t>> succ_;          // [token] -> successor indices
  std::vector<std::vector<std::vector<double>>> wts_;   // [class][token] -> weights over succ
};

struct SynthData {
  Vocabulary vocab_a;
  Vocabulary vocab_b;
  BilingualCorpus train;
  MonolingualCorpus mono_a;
  MonolingualCorpus mono_b;
  BilingualCorpus valid;
  BilingualCorpus test;
  GroundTruthMap map;
};

std::string a_token(std::size_t i);
std::string b_token(std::size_t i);

SynthData gen_language_pair(const SynthLangSpec& spec, std::uint64_t seed);

}  // namespace dualoop
