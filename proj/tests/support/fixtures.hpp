#pragma once

#include "dualoop/langmodel/lm.hpp"
#include "dualoop/numerics/grad_check.hpp"
#include "dualoop/seq2seq/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

inline void randomize(dualoop::ParamStore& store, dualoop::Rng& rng, double scale) {
  for (auto& e : store) {
    for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = rng.uniform(-scale, scale);
  }
}

/// Tiny encoder-decoder with every entry (biases included) uniform in
/// [-scale, scale].
inline dualoop::Seq2SeqParams tiny_seq2seq(std::uint64_t seed, std::size_t src_vocab = 7,
                                           std::size_t tgt_vocab = 6, std::size_t emb = 5,
                                           std::size_t hid = 6, std::size_t att = 4,
                                           double scale = 0.8) {
  dualoop::Rng rng(seed);
  auto p = dualoop::zero_seq2seq({src_vocab, tgt_vocab, emb, hid, att});
  randomize(p.store, rng, scale);
  return p;
}

inline dualoop::LmParams tiny_lm(std::uint64_t seed, std::size_t vocab = 6, std::size_t emb = 5,
                                 std::size_t hid = 6, double scale = 0.8) {
  dualoop::Rng rng(seed);
  auto lm = dualoop::zero_lm({vocab, emb, hid});
  randomize(lm.store, rng, scale);
  return lm;
}

inline dualoop::Sentence random_sentence(dualoop::Rng& rng, std::size_t vocab, std::size_t min_len,
                                         std::size_t max_len) {
  const auto len = min_len + rng.below(max_len - min_len + 1);
  dualoop::Sentence s;
  while (s.size() < len) {
    const auto id = static_cast<dualoop::TokenId>(rng.below(vocab));
    if (id != dualoop::kEos) s.push_back(id);
  }
  return s;
}

/// Extrapolated central differences at h = 1e-3; see grad_check.
inline dualoop::GradCheckOptions fd_options(double tol = 1e-4) {
  dualoop::GradCheckOptions o;
  o.step = 1e-3;
  o.extrapolate = true;
  o.tolerance = tol;
  return o;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dualoop_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
