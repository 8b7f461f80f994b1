#pragma once

#include "dualoop/corpus/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dualoop {

struct MonolingualCorpus {
  std::string language;
  std::vector<Sentence> sentences;

  [[nodiscard]] std::size_t size() const { return sentences.size(); }
  [[nodiscard]] bool empty() const { return sentences.empty(); }
};

struct SentencePair {
  Sentence source;
  Sentence target;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct BilingualCorpus {
  std::vector<SentencePair> pairs;

  [[nodiscard]] std::size_t size() const { return pairs.size(); }
  [[nodiscard]] bool empty() const { return pairs.empty(); }
};

bool contains_unk(const Sentence& s);

/// Keeps sentences of length <= max_len (and, with drop_oov, without UNK).
MonolingualCorpus filter_corpus(const MonolingualCorpus& corpus, std::size_t max_len, bool drop_oov);
/// A pair survives only if both sides pass.
BilingualCorpus filter_corpus(const BilingualCorpus& corpus, std::size_t max_len, bool drop_oov);

/// Uniform sample without replacement of round(fraction * N) pairs.
BilingualCorpus subsample_bilingual(const BilingualCorpus& corpus, double fraction, std::uint64_t seed);

/// Swaps source and target of every pair.
BilingualCorpus swap_sides(const BilingualCorpus& corpus);

/// Source or target side as a monolingual corpus.
MonolingualCorpus source_side(const BilingualCorpus& corpus, std::string language);
MonolingualCorpus target_side(const BilingualCorpus& corpus, std::string language);

/// Throws std::invalid_argument if any sentence is empty or has an id
/// outside [0, vocab_size).
void validate_sentence(const Sentence& s, std::size_t vocab_size, std::string_view what);

// Text files: one sentence per line, space-separated tokens.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

MonolingualCorpus load_mono(const std::filesystem::path& path, const Vocabulary& vocab,
                            std::string language);
void save_mono(const std::filesystem::path& path, const MonolingualCorpus& corpus,
               const Vocabulary& vocab);

/// Reads `<prefix>.a` and `<prefix>.b` (source = A side).
BilingualCorpus load_bilingual(const std::filesystem::path& prefix, const Vocabulary& vocab_a,
                               const Vocabulary& vocab_b);
void save_bilingual(const std::filesystem::path& prefix, const BilingualCorpus& corpus,
                    const Vocabulary& vocab_a, const Vocabulary& vocab_b);

}  // namespace dualoop
