#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dualoop {

using TokenId = std::int32_t;
/// Token ids of one sentence, without BOS/EOS.
using Sentence = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kNumReserved = 4;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<UNK>";

class Vocabulary {
 public:
  Vocabulary() = default;
  /// `tokens` are corpus tokens in id order; ids start after the reserved ones.
  explicit Vocabulary(std::vector<std::string> tokens);

  [[nodiscard]] std::size_t size() const { return tokens_.size() + kNumReserved; }
  [[nodiscard]] const std::vector<std::string>& corpus_tokens() const { return tokens_; }

  /// UNK for out-of-vocabulary tokens.
  [[nodiscard]] TokenId id(std::string_view token) const;
  [[nodiscard]] bool contains(std::string_view token) const;
  [[nodiscard]] const std::string& token(TokenId id) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

bool is_reserved_token(std::string_view token);

std::vector<std::string> split_tokens(std::string_view line);

/// Frequency-ranked vocabulary (ties lexicographic), truncated to `max_size`
/// corpus tokens.
Vocabulary build_vocab(const std::vector<std::string>& raw_sentences, std::size_t max_size);

Sentence encode(const Vocabulary& vocab, std::string_view raw);
Sentence encode_tokens(const Vocabulary& vocab, const std::vector<std::string>& tokens);
std::string decode(const Vocabulary& vocab, const Sentence& sentence);

/// One corpus token per line; reserved tokens are implicit.
void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::filesystem::path& path);

}  // namespace dualoop
