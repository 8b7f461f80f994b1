#include "dualoop/corpus/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace dualoop {

bool is_reserved_token(std::string_view token) {
  return token == kPadToken || token == kBosToken || token == kEosToken || token == kUnkToken;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (is_reserved_token(tokens_[i])) {
      throw std::invalid_argument("vocabulary: reserved token in corpus list: " + tokens_[i]);
    }
    const auto id = static_cast<TokenId>(i) + kNumReserved;
    if (!ids_.emplace(tokens_[i], id).second) {
      throw std::invalid_argument("vocabulary: duplicate token " + tokens_[i]);
    }
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.find(token) != ids_.end(); }

const std::string& Vocabulary::token(TokenId id) const {
  static const std::string reserved[] = {std::string(kPadToken), std::string(kBosToken),
                                         std::string(kEosToken), std::string(kUnkToken)};
  if (id >= 0 && id < kNumReserved) return reserved[id];
  const auto idx = static_cast<std::size_t>(id - kNumReserved);
  if (id < 0 || idx >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(size()));
  }
  return tokens_[idx];
}

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::string>& raw_sentences, std::size_t max_size) {
  if (max_size < 1) throw std::invalid_argument("build_vocab: max_size must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& line : raw_sentences) {
    for (auto& tok : split_tokens(line)) {
      if (!is_reserved_token(tok)) ++counts[std::move(tok)];
    }
  }
  if (counts.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, n] : ranked) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

Sentence encode_tokens(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
  Sentence s;
  s.reserve(tokens.size());
  for (const auto& t : tokens) s.push_back(vocab.id(t));
  return s;
}

Sentence encode(const Vocabulary& vocab, std::string_view raw) {
  auto tokens = split_tokens(raw);
  if (tokens.empty()) throw std::invalid_argument("encode: empty sentence");
  return encode_tokens(vocab, tokens);
}

std::string decode(const Vocabulary& vocab, const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(sentence[i]);
  }
  return out;
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto& t : vocab.corpus_tokens()) out << t << '\n';
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

}  // namespace dualoop
