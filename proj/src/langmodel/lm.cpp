#include "dualoop/langmodel/lm.hpp"

#include "dualoop/numerics/gru.hpp"
#include "dualoop/numerics/ops.hpp"
#include "dualoop/numerics/param_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dualoop {

namespace {

ParamStore build_store(const LmDims& d, Rng* rng) {
  if (d.vocab <= static_cast<std::size_t>(kEos) || d.emb == 0 || d.hid == 0) {
    throw std::invalid_argument("language model: invalid dimensions");
  }
  const auto V = static_cast<Eigen::Index>(d.vocab);
  const auto E = static_cast<Eigen::Index>(d.emb);
  const auto H = static_cast<Eigen::Index>(d.hid);
  auto weight = [&](Eigen::Index r, Eigen::Index c) -> Matrix {
    if (!rng) return Matrix::Zero(r, c);
    const double a = glorot_limit(c, r);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform(-a, a);
    return m;
  };
  ParamStore s;
  s.add("emb", weight(V, E));
  s.add("gru.W", weight(3 * H, E));
  s.add("gru.U", weight(3 * H, H));
  s.add("gru.b", Matrix::Zero(3 * H, 1));
  s.add("out.W", weight(V, H));
  s.add("out.b", Matrix::Zero(V, 1));
  return s;
}

struct View {
  const Matrix& emb;
  GruWeights gru;
  const Matrix& out_W;
  const Matrix& out_b;
  explicit View(const ParamStore& s)
      : emb(s.at("emb")),
        gru{s.at("gru.W"), s.at("gru.U"), s.at("gru.b")},
        out_W(s.at("out.W")),
        out_b(s.at("out.b")) {}
};

void check_ids(const LmParams& lm, const Sentence& s) {
  for (TokenId id : s) {
    if (id < 0 || static_cast<std::size_t>(id) >= lm.dims.vocab) {
      throw std::invalid_argument("language model: token id " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(lm.dims.vocab));
    }
  }
}

// Sum of log P(w_t | w_<t) over `tokens`, optionally followed by EOS.
double score_tokens(const LmParams& lm, const Sentence& s, bool with_eos) {
  check_ids(lm, s);
  const View v(lm.store);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(lm.dims.hid));
  TokenId prev = kBos;
  double lp = 0.0;
  const std::size_t steps = s.size() + (with_eos ? 1 : 0);
  for (std::size_t t = 0; t < steps; ++t) {
    h = gru_forward(v.gru, v.emb.row(prev).transpose(), h);
    const Vector logits = v.out_W * h + v.out_b.col(0);
    const TokenId y = t < s.size() ? s[t] : kEos;
    lp += logits[y] - log_sum_exp(logits);
    prev = y;
  }
  return lp;
}

}  // namespace

LmParams init_lm(const LmDims& dims, Rng& rng) { return {dims, build_store(dims, &rng)}; }
LmParams zero_lm(const LmDims& dims) { return {dims, build_store(dims, nullptr)}; }

double lm_score(const LmParams& lm, const Sentence& s, bool normalize) {
  const double lp = score_tokens(lm, s, true);
  return normalize ? lp / static_cast<double>(s.size() + 1) : lp;
}

double lm_prefix_log_prob(const LmParams& lm, const Sentence& s) { return score_tokens(lm, s, false); }

Vector lm_next_distribution(const LmParams& lm, const Sentence& prefix) {
  check_ids(lm, prefix);
  const View v(lm.store);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(lm.dims.hid));
  TokenId prev = kBos;
  for (std::size_t t = 0; t <= prefix.size(); ++t) {
    h = gru_forward(v.gru, v.emb.row(prev).transpose(), h);
    if (t < prefix.size()) prev = prefix[t];
  }
  return softmax(v.out_W * h + v.out_b.col(0));
}

double accumulate_lm_gradient(const LmParams& lm, const Sentence& s, double scale, ParamStore& grad) {
  check_ids(lm, s);
  const View v(lm.store);
  Matrix& g_emb = grad.at("emb");
  GruGrads g_gru{grad.at("gru.W"), grad.at("gru.U"), grad.at("gru.b")};
  Matrix& g_outW = grad.at("out.W");
  Matrix& g_outb = grad.at("out.b");

  const std::size_t steps = s.size() + 1;
  std::vector<GruCache> cache(steps);
  std::vector<Vector> probs(steps);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(lm.dims.hid));
  TokenId prev = kBos;
  double lp = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    gru_forward(v.gru, v.emb.row(prev).transpose(), h, cache[t]);
    h = cache[t].h;
    probs[t] = softmax(v.out_W * h + v.out_b.col(0));
    const TokenId y = t < s.size() ? s[t] : kEos;
    lp += std::log(probs[t][y]);
    prev = y;
  }

  Vector dh_next = Vector::Zero(h.size());
  Vector dx, dh_prev;
  for (std::size_t t = steps; t-- > 0;) {
    const TokenId y = t < s.size() ? s[t] : kEos;
    const TokenId x = t == 0 ? kBos : s[t - 1];
    Vector dlogits = -scale * probs[t];
    dlogits[y] += scale;
    g_outW.noalias() += dlogits * cache[t].h.transpose();
    g_outb.col(0) += dlogits;
    const Vector dh = v.out_W.transpose() * dlogits + dh_next;
    gru_backward(v.gru, cache[t], dh, g_gru, dx, dh_prev);
    g_emb.row(x) += dx.transpose();
    dh_next = dh_prev;
  }
  return lp;
}

ParamStore lm_gradient(const LmParams& lm, const Sentence& s) {
  ParamStore g = lm.store.zeros_like();
  accumulate_lm_gradient(lm, s, 1.0, g);
  return g;
}

double lm_perplexity(const LmParams& lm, const std::vector<Sentence>& sentences) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    total += lm_score(lm, s);
    tokens += s.size() + 1;
  }
  if (tokens == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(-total / static_cast<double>(tokens));
}

LmTrainResult lm_train(const MonolingualCorpus& corpus, std::size_t vocab_size,
                       const LmTrainConfig& config, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("lm_train: empty corpus");
  if (config.batch < 1) throw std::invalid_argument("lm_train: batch must be >= 1");

  Rng init_rng = rng.split("lm-init");
  Rng order_rng = rng.split("lm-order");

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  order_rng.shuffle(order.begin(), order.end());
  std::size_t n_valid = static_cast<std::size_t>(config.valid_fraction * double(corpus.size()));
  n_valid = std::min({n_valid, config.max_valid, corpus.size() - 1});

  LmTrainResult result;
  std::vector<Sentence> train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_valid ? result.held_out : train).push_back(corpus.sentences[order[i]]);
  }

  LmParams lm = init_lm({vocab_size, config.emb, config.hid}, init_rng);
  DescentOptimizer opt(config.optimizer, lm.store);
  ParamStore grad = lm.store.zeros_like();

  result.params = lm;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(idx.begin(), idx.end());
    double nll = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < idx.size(); start += config.batch) {
      const std::size_t end = std::min(idx.size(), start + config.batch);
      grad.set_zero();
      // descent on mean negative log-likelihood
      const double scale = -1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Sentence& s = train[idx[k]];
        nll -= accumulate_lm_gradient(lm, s, scale, grad);
        tokens += s.size() + 1;
      }
      opt.step(lm.store, grad);
    }
    const double ppl = result.held_out.empty() ? std::exp(nll / double(tokens))
                                               : lm_perplexity(lm, result.held_out);
    result.log.push_back({epoch, nll / static_cast<double>(tokens), ppl});
    if (ppl < best) {
      best = ppl;
      result.params = lm;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

void save_lm(const std::filesystem::path& path, const LmParams& lm) {
  save_params(path, lm.store);
  write_meta(path, {{"kind", "lm"},
                    {"vocab", std::to_string(lm.dims.vocab)},
                    {"emb", std::to_string(lm.dims.emb)},
                    {"hid", std::to_string(lm.dims.hid)}});
}

LmParams load_lm(const std::filesystem::path& path) {
  const MetaFields meta = read_meta(path);
  if (meta.count("kind") == 0 || meta.at("kind") != "lm") {
    throw std::runtime_error(path.string() + ": not a language-model checkpoint");
  }
  LmParams lm;
  lm.dims = {meta_size(meta, "vocab"), meta_size(meta, "emb"), meta_size(meta, "hid")};
  lm.store = load_params(path);
  lm.store.require_same_layout(zero_lm(lm.dims).store, "load_lm");
  return lm;
}

}  // namespace dualoop
