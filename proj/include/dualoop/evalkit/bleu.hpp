#pragma once

#include "dualoop/corpus/vocab.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dualoop {

/// Corpus-level BLEU with multi-bleu.perl semantics: clipped n-gram counts
/// pooled over the corpus, unsmoothed geometric mean, single reference.
struct BleuReport {
  double bleu = 0.0;  // 0..100
  int max_n = 4;
  std::array<double, 4> precisions{};
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

BleuReport corpus_bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                       int max_n = 4);

/// e.g. "BLEU = 41.20, 71.3/49.0/35.2/25.9 (BP=1.000, ratio=1.012, hyp_len=..., ref_len=...)"
std::string summary_line(const BleuReport& report);
nlohmann::ordered_json to_json(const BleuReport& report);

struct LengthBucket {
  std::size_t lo = 0;  // inclusive source length bounds
  std::size_t hi = 0;
  std::size_t count = 0;
  std::optional<BleuReport> report;  // absent for empty buckets
};

struct LengthBucketReport {
  std::vector<LengthBucket> buckets;
};

/// Default Figure-style buckets: [1,10], [11,20], [21,30], [31,40], [41,50].
std::vector<std::pair<std::size_t, std::size_t>> default_length_buckets();

/// Buckets must not overlap; sentences whose source length falls outside every
/// bucket are an error.
LengthBucketReport bleu_by_length(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                                  const std::vector<Sentence>& srcs,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& buckets);

nlohmann::ordered_json to_json(const LengthBucketReport& report);
/// lo,hi,count,bleu (empty bleu cell for absent buckets).
std::string to_csv(const LengthBucketReport& report);

}  // namespace dualoop
