#include "dualoop/corpus/corpus.hpp"

#include "dualoop/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dualoop {

bool contains_unk(const Sentence& s) { return std::find(s.begin(), s.end(), kUnk) != s.end(); }

namespace {

bool keep(const Sentence& s, std::size_t max_len, bool drop_oov) {
  return s.size() <= max_len && !(drop_oov && contains_unk(s));
}

}  // namespace

MonolingualCorpus filter_corpus(const MonolingualCorpus& corpus, std::size_t max_len, bool drop_oov) {
  if (max_len < 1) throw std::invalid_argument("filter_corpus: max_len must be >= 1");
  MonolingualCorpus out{corpus.language, {}};
  for (const auto& s : corpus.sentences) {
    if (keep(s, max_len, drop_oov)) out.sentences.push_back(s);
  }
  return out;
}

BilingualCorpus filter_corpus(const BilingualCorpus& corpus, std::size_t max_len, bool drop_oov) {
  if (max_len < 1) throw std::invalid_argument("filter_corpus: max_len must be >= 1");
  BilingualCorpus out;
  for (const auto& p : corpus.pairs) {
    if (keep(p.source, max_len, drop_oov) && keep(p.target, max_len, drop_oov)) out.pairs.push_back(p);
  }
  return out;
}

BilingualCorpus subsample_bilingual(const BilingualCorpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample_bilingual: fraction must be in (0, 1], got " +
                                std::to_string(fraction));
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(corpus.size())));
  BilingualCorpus out;
  out.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.pairs.push_back(corpus.pairs[order[i]]);
  return out;
}

BilingualCorpus swap_sides(const BilingualCorpus& corpus) {
  BilingualCorpus out;
  out.pairs.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.pairs.push_back({p.target, p.source});
  return out;
}

MonolingualCorpus source_side(const BilingualCorpus& corpus, std::string language) {
  MonolingualCorpus out{std::move(language), {}};
  for (const auto& p : corpus.pairs) out.sentences.push_back(p.source);
  return out;
}

MonolingualCorpus target_side(const BilingualCorpus& corpus, std::string language) {
  MonolingualCorpus out{std::move(language), {}};
  for (const auto& p : corpus.pairs) out.sentences.push_back(p.target);
  return out;
}

void validate_sentence(const Sentence& s, std::size_t vocab_size, std::string_view what) {
  if (s.empty()) throw std::invalid_argument(std::string(what) + ": empty sentence");
  for (TokenId id : s) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw std::invalid_argument(std::string(what) + ": token id " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(vocab_size));
    }
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

MonolingualCorpus load_mono(const std::filesystem::path& path, const Vocabulary& vocab,
                            std::string language) {
  MonolingualCorpus out{std::move(language), {}};
  for (const auto& line : read_lines(path)) {
    if (split_tokens(line).empty()) continue;
    out.sentences.push_back(encode(vocab, line));
  }
  return out;
}

void save_mono(const std::filesystem::path& path, const MonolingualCorpus& corpus,
               const Vocabulary& vocab) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus.sentences) lines.push_back(decode(vocab, s));
  write_lines(path, lines);
}

BilingualCorpus load_bilingual(const std::filesystem::path& prefix, const Vocabulary& vocab_a,
                               const Vocabulary& vocab_b) {
  const auto a = read_lines(prefix.string() + ".a");
  const auto b = read_lines(prefix.string() + ".b");
  if (a.size() != b.size()) {
    throw std::runtime_error("bilingual files differ in length: " + prefix.string() + ".a has " +
                             std::to_string(a.size()) + " lines, .b has " + std::to_string(b.size()));
  }
  BilingualCorpus out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.pairs.push_back({encode(vocab_a, a[i]), encode(vocab_b, b[i])});
  }
  return out;
}

void save_bilingual(const std::filesystem::path& prefix, const BilingualCorpus& corpus,
                    const Vocabulary& vocab_a, const Vocabulary& vocab_b) {
  std::vector<std::string> a, b;
  for (const auto& p : corpus.pairs) {
    a.push_back(decode(vocab_a, p.source));
    b.push_back(decode(vocab_b, p.target));
  }
  write_lines(prefix.string() + ".a", a);
  write_lines(prefix.string() + ".b", b);
}

}  // namespace dualoop
