#pragma once

#include "dualoop/corpus/vocab.hpp"
#include "dualoop/numerics/rng.hpp"
#include "dualoop/numerics/tensor.hpp"

#include <filesystem>

namespace dualoop {

struct Seq2SeqDims {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t emb = 32;
  std::size_t hid = 64;
  /// Hidden width of the alignment network; 0 means `hid`.
  std::size_t att = 0;

  [[nodiscard]] std::size_t att_width() const { return att == 0 ? hid : att; }
  friend bool operator==(const Seq2SeqDims&, const Seq2SeqDims&) = default;
};

/// Encoder-decoder parameters. Entries of `store`:
///   src_emb  Vs x E      tgt_emb  Vt x E
///   enc.W    3H x E      enc.U    3H x H     enc.b  3H x 1
///   dec.init H x H       (r0 = tanh(dec.init * h_last))
///   dec.W    3H x (E+H)  dec.U    3H x H     dec.b  3H x 1
///   att.W    A x H       att.U    A x H      att.v  A x 1
///   out.W    Vt x H      out.b    Vt x 1
struct Seq2SeqParams {
  Seq2SeqDims dims;
  ParamStore store;
};

/// Glorot-uniform weights, zero biases.
Seq2SeqParams init_seq2seq(const Seq2SeqDims& dims, Rng& rng);
Seq2SeqParams zero_seq2seq(const Seq2SeqDims& dims);

struct EncoderStates {
  Matrix states;     // T x H, row i is h_{i+1}
  Matrix projected;  // T x A, att.U applied to each state
};

struct DecoderState {
  Vector hidden;        // r_{t-1}
  TokenId last = kBos;  // y_{t-1}
  std::size_t step = 0; // tokens consumed so far
};

struct DecodeStep {
  Vector probs;         // P(y_t | y_<t, x); EOS has probability 0 at the first step
  Vector attn_weights;  // over source positions
  DecoderState next;    // hidden = r_t, step + 1; caller sets `last`
};

EncoderStates encode_source(const Seq2SeqParams& params, const Sentence& src);
DecoderState initial_decoder_state(const Seq2SeqParams& params, const EncoderStates& enc);
DecodeStep decode_step(const Seq2SeqParams& params, const DecoderState& state,
                       const EncoderStates& enc);

/// log P(tgt + EOS | src).
double sequence_log_prob(const Seq2SeqParams& params, const Sentence& src, const Sentence& tgt);

/// Adds scale * d log P(tgt|src) / d params into `grad` and returns log P.
double accumulate_log_prob_gradient(const Seq2SeqParams& params, const Sentence& src,
                                    const Sentence& tgt, double scale, ParamStore& grad);
ParamStore log_prob_gradient(const Seq2SeqParams& params, const Sentence& src, const Sentence& tgt);

/// Ancestral sample; stops after `max_len` tokens if EOS has not been drawn.
Sentence sample_translation(const Seq2SeqParams& params, const Sentence& src, std::size_t max_len,
                            Rng& rng);

/// Arg-max decoding. Ties prefer EOS, then the lowest id.
Sentence greedy_decode(const Seq2SeqParams& params, const Sentence& src, std::size_t max_len);

/// Writes `path` (parameter binary) and `path.meta` (dims sidecar).
void save_seq2seq(const std::filesystem::path& path, const Seq2SeqParams& params);
Seq2SeqParams load_seq2seq(const std::filesystem::path& path);

}  // namespace dualoop
