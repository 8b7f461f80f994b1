#include "dualoop/seq2seq/model.hpp"

#include "dualoop/corpus/corpus.hpp"
#include "dualoop/numerics/gru.hpp"
#include "dualoop/numerics/ops.hpp"
#include "dualoop/numerics/param_io.hpp"

#include <cmath>
#include <limits>

namespace dualoop {

namespace {

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double a = glorot_limit(cols, rows);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
  return m;
}

ParamStore build_store(const Seq2SeqDims& d, Rng* rng) {
  const auto Vs = static_cast<Eigen::Index>(d.src_vocab);
  const auto Vt = static_cast<Eigen::Index>(d.tgt_vocab);
  const auto E = static_cast<Eigen::Index>(d.emb);
  const auto H = static_cast<Eigen::Index>(d.hid);
  const auto A = static_cast<Eigen::Index>(d.att_width());
  auto weight = [&](Eigen::Index r, Eigen::Index c) -> Matrix {
    return rng ? glorot(r, c, *rng) : Matrix::Zero(r, c);
  };
  ParamStore s;
  s.add("src_emb", weight(Vs, E));
  s.add("tgt_emb", weight(Vt, E));
  s.add("enc.W", weight(3 * H, E));
  s.add("enc.U", weight(3 * H, H));
  s.add("enc.b", Matrix::Zero(3 * H, 1));
  s.add("dec.init", weight(H, H));
  s.add("dec.W", weight(3 * H, E + H));
  s.add("dec.U", weight(3 * H, H));
  s.add("dec.b", Matrix::Zero(3 * H, 1));
  s.add("att.W", weight(A, H));
  s.add("att.U", weight(A, H));
  s.add("att.v", weight(A, 1));
  s.add("out.W", weight(Vt, H));
  s.add("out.b", Matrix::Zero(Vt, 1));
  return s;
}

void check_dims(const Seq2SeqDims& d) {
  if (d.src_vocab == 0 || d.tgt_vocab == 0 || d.emb == 0 || d.hid == 0) {
    throw std::invalid_argument("seq2seq: all dimensions must be positive");
  }
  if (d.tgt_vocab <= static_cast<std::size_t>(kEos)) {
    throw std::invalid_argument("seq2seq: target vocabulary must contain EOS");
  }
}

// Cached references into a ParamStore, looked up once per call.
struct View {
  const Matrix& src_emb;
  const Matrix& tgt_emb;
  GruWeights enc;
  const Matrix& init;
  GruWeights dec;
  const Matrix& att_W;
  const Matrix& att_U;
  const Matrix& att_v;
  const Matrix& out_W;
  const Matrix& out_b;

  explicit View(const ParamStore& s)
      : src_emb(s.at("src_emb")),
        tgt_emb(s.at("tgt_emb")),
        enc{s.at("enc.W"), s.at("enc.U"), s.at("enc.b")},
        init(s.at("dec.init")),
        dec{s.at("dec.W"), s.at("dec.U"), s.at("dec.b")},
        att_W(s.at("att.W")),
        att_U(s.at("att.U")),
        att_v(s.at("att.v")),
        out_W(s.at("out.W")),
        out_b(s.at("out.b")) {}
};

struct GradView {
  Matrix& src_emb;
  Matrix& tgt_emb;
  GruGrads enc;
  Matrix& init;
  GruGrads dec;
  Matrix& att_W;
  Matrix& att_U;
  Matrix& att_v;
  Matrix& out_W;
  Matrix& out_b;

  explicit GradView(ParamStore& s)
      : src_emb(s.at("src_emb")),
        tgt_emb(s.at("tgt_emb")),
        enc{s.at("enc.W"), s.at("enc.U"), s.at("enc.b")},
        init(s.at("dec.init")),
        dec{s.at("dec.W"), s.at("dec.U"), s.at("dec.b")},
        att_W(s.at("att.W")),
        att_U(s.at("att.U")),
        att_v(s.at("att.v")),
        out_W(s.at("out.W")),
        out_b(s.at("out.b")) {}
};

void check_target(const Seq2SeqParams& p, const Sentence& tgt) {
  if (tgt.empty()) throw std::invalid_argument("seq2seq: empty target sentence");
  for (TokenId id : tgt) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.dims.tgt_vocab) {
      throw std::invalid_argument("seq2seq: target id " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(p.dims.tgt_vocab));
    }
    if (id == kEos) throw std::invalid_argument("seq2seq: target sentence contains EOS");
  }
}

struct Attention {
  Matrix hidden;  // T x A, tanh(att.W r + att.U h_i)
  Vector weights;
  Vector context;
};

void attend(const View& v, const Vector& r_prev, const EncoderStates& enc, Attention& out) {
  const Vector pre = v.att_W * r_prev;
  out.hidden = (enc.projected.rowwise() + pre.transpose()).array().tanh();
  const Vector scores = out.hidden * v.att_v.col(0);
  out.weights = softmax(scores);
  out.context = enc.states.transpose() * out.weights;
}

Vector output_logits(const View& v, const Vector& r) { return v.out_W * r + v.out_b.col(0); }

// Normalizes logits into probabilities in place, masking EOS on the first step.
Vector output_probs(Vector logits, bool first_step) {
  if (first_step) logits[kEos] = -std::numeric_limits<double>::infinity();
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).unaryExpr([](double x) { return std::exp(x); });
  return e / e.sum();
}

Vector decoder_input(const View& v, TokenId last, const Vector& context) {
  const auto E = v.tgt_emb.cols();
  Vector u(E + context.size());
  u.head(E) = v.tgt_emb.row(last).transpose();
  u.tail(context.size()) = context;
  return u;
}

}  // namespace

Seq2SeqParams init_seq2seq(const Seq2SeqDims& dims, Rng& rng) {
  check_dims(dims);
  return {dims, build_store(dims, &rng)};
}

Seq2SeqParams zero_seq2seq(const Seq2SeqDims& dims) {
  check_dims(dims);
  return {dims, build_store(dims, nullptr)};
}

EncoderStates encode_source(const Seq2SeqParams& params, const Sentence& src) {
  validate_sentence(src, params.dims.src_vocab, "encode_source");
  const View v(params.store);
  const auto H = static_cast<Eigen::Index>(params.dims.hid);
  EncoderStates enc;
  enc.states.resize(static_cast<Eigen::Index>(src.size()), H);
  Vector h = Vector::Zero(H);
  for (std::size_t i = 0; i < src.size(); ++i) {
    h = gru_forward(v.enc, v.src_emb.row(src[i]).transpose(), h);
    enc.states.row(static_cast<Eigen::Index>(i)) = h.transpose();
  }
  enc.projected = enc.states * v.att_U.transpose();
  return enc;
}

DecoderState initial_decoder_state(const Seq2SeqParams& params, const EncoderStates& enc) {
  if (enc.states.rows() == 0) throw std::invalid_argument("decoder: empty encoder states");
  const View v(params.store);
  DecoderState s;
  s.hidden = (v.init * enc.states.row(enc.states.rows() - 1).transpose()).array().tanh();
  s.last = kBos;
  s.step = 0;
  return s;
}

DecodeStep decode_step(const Seq2SeqParams& params, const DecoderState& state,
                       const EncoderStates& enc) {
  const View v(params.store);
  if (state.hidden.size() != static_cast<Eigen::Index>(params.dims.hid) ||
      enc.states.cols() != static_cast<Eigen::Index>(params.dims.hid) ||
      enc.projected.cols() != v.att_U.rows()) {
    throw DimensionError("decode_step: state of size " + std::to_string(state.hidden.size()) +
                         " / encoder states " + shape_string(enc.states) +
                         " do not match hidden size " + std::to_string(params.dims.hid));
  }
  if (state.last < 0 || static_cast<std::size_t>(state.last) >= params.dims.tgt_vocab) {
    throw std::invalid_argument("decode_step: previous token outside target vocabulary");
  }
  Attention att;
  attend(v, state.hidden, enc, att);
  DecodeStep out;
  out.next.hidden = gru_forward(v.dec, decoder_input(v, state.last, att.context), state.hidden);
  out.next.step = state.step + 1;
  out.next.last = kPad;
  out.probs = output_probs(output_logits(v, out.next.hidden), state.step == 0);
  out.attn_weights = std::move(att.weights);
  return out;
}

double sequence_log_prob(const Seq2SeqParams& params, const Sentence& src, const Sentence& tgt) {
  check_target(params, tgt);
  const EncoderStates enc = encode_source(params, src);
  DecoderState state = initial_decoder_state(params, enc);
  double lp = 0.0;
  for (std::size_t t = 0; t <= tgt.size(); ++t) {
    const TokenId y = t < tgt.size() ? tgt[t] : kEos;
    DecodeStep step = decode_step(params, state, enc);
    lp += std::log(step.probs[y]);
    state = std::move(step.next);
    state.last = y;
  }
  return lp;
}

double accumulate_log_prob_gradient(const Seq2SeqParams& params, const Sentence& src,
                                    const Sentence& tgt, double scale, ParamStore& grad) {
  check_target(params, tgt);
  validate_sentence(src, params.dims.src_vocab, "log_prob_gradient");
  const View v(params.store);
  GradView g(grad);
  const auto H = static_cast<Eigen::Index>(params.dims.hid);
  const auto E = static_cast<Eigen::Index>(params.dims.emb);
  const auto T = static_cast<Eigen::Index>(src.size());

  // Forward pass with caches.
  std::vector<GruCache> enc_cache(src.size());
  EncoderStates enc;
  enc.states.resize(T, H);
  Vector h = Vector::Zero(H);
  for (Eigen::Index i = 0; i < T; ++i) {
    gru_forward(v.enc, v.src_emb.row(src[static_cast<std::size_t>(i)]).transpose(), h,
                enc_cache[static_cast<std::size_t>(i)]);
    h = enc_cache[static_cast<std::size_t>(i)].h;
    enc.states.row(i) = h.transpose();
  }
  enc.projected = enc.states * v.att_U.transpose();
  const Vector r0 = (v.init * h).array().tanh();

  const std::size_t steps = tgt.size() + 1;
  std::vector<Attention> att(steps);
  std::vector<GruCache> dec_cache(steps);
  std::vector<Vector> probs(steps);
  double lp = 0.0;
  Vector r = r0;
  TokenId prev = kBos;
  for (std::size_t t = 0; t < steps; ++t) {
    const TokenId y = t < tgt.size() ? tgt[t] : kEos;
    attend(v, r, enc, att[t]);
    gru_forward(v.dec, decoder_input(v, prev, att[t].context), r, dec_cache[t]);
    r = dec_cache[t].h;
    probs[t] = output_probs(output_logits(v, r), t == 0);
    lp += std::log(probs[t][y]);
    prev = y;
  }

  // Backward pass.
  Matrix dH = Matrix::Zero(T, H);
  Vector dr_next = Vector::Zero(H);
  Vector du, dr_prev;
  for (std::size_t t = steps; t-- > 0;) {
    const TokenId y = t < tgt.size() ? tgt[t] : kEos;
    const TokenId y_prev = t == 0 ? kBos : tgt[t - 1];
    const GruCache& cache = dec_cache[t];

    Vector dlogits = -scale * probs[t];
    dlogits[y] += scale;
    g.out_W.noalias() += dlogits * cache.h.transpose();
    g.out_b.col(0) += dlogits;
    Vector dr = v.out_W.transpose() * dlogits + dr_next;

    gru_backward(v.dec, cache, dr, g.dec, du, dr_prev);
    g.tgt_emb.row(y_prev) += du.head(E).transpose();
    const Vector dc = du.tail(H);

    const Attention& a = att[t];
    const Vector dweights = enc.states * dc;
    dH.noalias() += a.weights * dc.transpose();
    const Vector dscores = a.weights.cwiseProduct(
        (dweights.array() - a.weights.dot(dweights)).matrix());
    g.att_v.col(0).noalias() += a.hidden.transpose() * dscores;
    const Matrix dz = ((dscores * v.att_v.col(0).transpose()).array() *
                       (1.0 - a.hidden.array().square()))
                          .matrix();
    const Vector dpre = dz.colwise().sum().transpose();
    g.att_U.noalias() += dz.transpose() * enc.states;
    dH.noalias() += dz * v.att_U;
    g.att_W.noalias() += dpre * cache.h_prev.transpose();
    dr_prev.noalias() += v.att_W.transpose() * dpre;
    dr_next = dr_prev;
  }

  // r0 = tanh(init * h_T)
  const Vector da0 = dr_next.cwiseProduct((1.0 - r0.array().square()).matrix());
  g.init.noalias() += da0 * enc.states.row(T - 1);
  dH.row(T - 1) += (v.init.transpose() * da0).transpose();

  Vector dh_carry = Vector::Zero(H);
  Vector dx, dh_prev;
  for (Eigen::Index i = T; i-- > 0;) {
    const Vector dh = dH.row(i).transpose() + dh_carry;
    gru_backward(v.enc, enc_cache[static_cast<std::size_t>(i)], dh, g.enc, dx, dh_prev);
    g.src_emb.row(src[static_cast<std::size_t>(i)]) += dx.transpose();
    dh_carry = dh_prev;
  }
  return lp;
}

ParamStore log_prob_gradient(const Seq2SeqParams& params, const Sentence& src, const Sentence& tgt) {
  ParamStore grad = params.store.zeros_like();
  accumulate_log_prob_gradient(params, src, tgt, 1.0, grad);
  return grad;
}

Sentence sample_translation(const Seq2SeqParams& params, const Sentence& src, std::size_t max_len,
                            Rng& rng) {
  if (max_len < 1) throw std::invalid_argument("sample_translation: max_len must be >= 1");
  const EncoderStates enc = encode_source(params, src);
  DecoderState state = initial_decoder_state(params, enc);
  Sentence out;
  while (out.size() < max_len) {
    DecodeStep step = decode_step(params, state, enc);
    const auto y = static_cast<TokenId>(
        rng.categorical(std::span<const double>(step.probs.data(), static_cast<std::size_t>(step.probs.size()))));
    if (y == kEos) break;
    out.push_back(y);
    state = std::move(step.next);
    state.last = y;
  }
  return out;
}

Sentence greedy_decode(const Seq2SeqParams& params, const Sentence& src, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  const EncoderStates enc = encode_source(params, src);
  DecoderState state = initial_decoder_state(params, enc);
  Sentence out;
  while (out.size() < max_len) {
    DecodeStep step = decode_step(params, state, enc);
    TokenId best = kEos;
    for (Eigen::Index i = 0; i < step.probs.size(); ++i) {
      if (step.probs[i] > step.probs[best]) best = static_cast<TokenId>(i);
    }
    if (best == kEos) break;
    out.push_back(best);
    state = std::move(step.next);
    state.last = best;
  }
  return out;
}

void save_seq2seq(const std::filesystem::path& path, const Seq2SeqParams& params) {
  save_params(path, params.store);
  write_meta(path, {{"kind", "seq2seq"},
                    {"src_vocab", std::to_string(params.dims.src_vocab)},
                    {"tgt_vocab", std::to_string(params.dims.tgt_vocab)},
                    {"emb", std::to_string(params.dims.emb)},
                    {"hid", std::to_string(params.dims.hid)},
                    {"att", std::to_string(params.dims.att_width())}});
}

Seq2SeqParams load_seq2seq(const std::filesystem::path& path) {
  const MetaFields meta = read_meta(path);
  if (meta.count("kind") == 0 || meta.at("kind") != "seq2seq") {
    throw std::runtime_error(path.string() + ": not a seq2seq checkpoint");
  }
  Seq2SeqParams p;
  p.dims.src_vocab = meta_size(meta, "src_vocab");
  p.dims.tgt_vocab = meta_size(meta, "tgt_vocab");
  p.dims.emb = meta_size(meta, "emb");
  p.dims.hid = meta_size(meta, "hid");
  p.dims.att = meta_size(meta, "att");
  p.store = load_params(path);
  p.store.require_same_layout(zero_seq2seq(p.dims).store, "load_seq2seq");
  return p;
}

}  // namespace dualoop
