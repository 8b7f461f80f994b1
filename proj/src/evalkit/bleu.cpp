#include "dualoop/evalkit/bleu.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dualoop {

namespace {

using NgramCounts = std::map<std::vector<TokenId>, std::size_t>;

NgramCounts count_ngrams(const Sentence& s, std::size_t n) {
  NgramCounts counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[std::vector<TokenId>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                  s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

BleuReport corpus_bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, int max_n) {
  if (hyps.size() != refs.size()) {
    throw std::invalid_argument("corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                                std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("corpus_bleu: max_n must be in [1, 4]");

  BleuReport r;
  r.max_n = max_n;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    r.hyp_len += hyps[k].size();
    r.ref_len += refs[k].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto hyp_counts = count_ngrams(hyps[k], static_cast<std::size_t>(n));
      const auto ref_counts = count_ngrams(refs[k], static_cast<std::size_t>(n));
      for (const auto& [gram, c] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) r.matches[n - 1] += std::min(c, it->second);
        r.totals[n - 1] += c;
      }
    }
  }

  bool any_zero = false;
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    r.precisions[n] = r.totals[n] ? double(r.matches[n]) / double(r.totals[n]) : 0.0;
    if (r.precisions[n] == 0.0) any_zero = true;
    else log_sum += std::log(r.precisions[n]);
  }
  if (r.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_len < r.ref_len) {
    r.brevity_penalty = std::exp(1.0 - double(r.ref_len) / double(r.hyp_len));
  }
  r.bleu = any_zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / max_n);
  return r;
}

std::string summary_line(const BleuReport& r) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "BLEU = %.2f, ", r.bleu);
  os << buf;
  for (int n = 0; n < r.max_n; ++n) {
    std::snprintf(buf, sizeof buf, "%s%.1f", n ? "/" : "", 100.0 * r.precisions[n]);
    os << buf;
  }
  const double ratio = r.ref_len ? double(r.hyp_len) / double(r.ref_len) : 0.0;
  std::snprintf(buf, sizeof buf, " (BP=%.3f, ratio=%.3f, ", r.brevity_penalty, ratio);
  os << buf << "hyp_len=" << r.hyp_len << ", ref_len=" << r.ref_len << ")";
  return os.str();
}

nlohmann::ordered_json to_json(const BleuReport& r) {
  nlohmann::ordered_json j;
  j["bleu"] = r.bleu;
  j["precisions"] = std::vector<double>(r.precisions.begin(), r.precisions.begin() + r.max_n);
  j["matches"] = std::vector<std::size_t>(r.matches.begin(), r.matches.begin() + r.max_n);
  j["totals"] = std::vector<std::size_t>(r.totals.begin(), r.totals.begin() + r.max_n);
  j["brevity_penalty"] = r.brevity_penalty;
  j["hyp_len"] = r.hyp_len;
  j["ref_len"] = r.ref_len;
  return j;
}

std::vector<std::pair<std::size_t, std::size_t>> default_length_buckets() {
  return {{1, 10}, {11, 20}, {21, 30}, {31, 40}, {41, 50}};
}

LengthBucketReport bleu_by_length(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs,
                                  const std::vector<Sentence>& srcs,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& buckets) {
  if (hyps.size() != refs.size() || hyps.size() != srcs.size()) {
    throw std::invalid_argument("bleu_by_length: hypothesis/reference/source lists differ in length");
  }
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i].first > buckets[i].second) throw std::invalid_argument("bleu_by_length: empty bucket range");
    for (std::size_t j = 0; j < i; ++j) {
      if (buckets[i].first <= buckets[j].second && buckets[j].first <= buckets[i].second) {
        throw std::invalid_argument("bleu_by_length: overlapping buckets");
      }
    }
  }
  std::vector<std::vector<Sentence>> bh(buckets.size()), br(buckets.size());
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const std::size_t len = srcs[k].size();
    bool placed = false;
    for (std::size_t b = 0; b < buckets.size() && !placed; ++b) {
      if (len >= buckets[b].first && len <= buckets[b].second) {
        bh[b].push_back(hyps[k]);
        br[b].push_back(refs[k]);
        placed = true;
      }
    }
    if (!placed) {
      throw std::invalid_argument("bleu_by_length: source length " + std::to_string(len) +
                                  " outside every bucket");
    }
  }
  LengthBucketReport report;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    LengthBucket bucket{buckets[b].first, buckets[b].second, bh[b].size(), std::nullopt};
    if (!bh[b].empty()) bucket.report = corpus_bleu(bh[b], br[b]);
    report.buckets.push_back(std::move(bucket));
  }
  return report;
}

nlohmann::ordered_json to_json(const LengthBucketReport& report) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& b : report.buckets) {
    nlohmann::ordered_json j{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}};
    j["bleu"] = b.report ? nlohmann::ordered_json(b.report->bleu) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::string to_csv(const LengthBucketReport& report) {
  std::ostringstream os;
  os << "lo,hi,count,bleu\n";
  for (const auto& b : report.buckets) {
    os << b.lo << ',' << b.hi << ',' << b.count << ',';
    if (b.report) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", b.report->bleu);
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace dualoop
