#include "dualoop/numerics/ops.hpp"

#include <cmath>
#include <limits>

namespace dualoop {

Vector affine(const Matrix& W, const Vector& x, const Vector& b) {
  if (W.cols() != x.size()) {
    throw DimensionError("affine: W is " + shape_string(W) + " but x has length " +
                         std::to_string(x.size()));
  }
  if (W.rows() != b.size()) {
    throw DimensionError("affine: W is " + shape_string(W) + " but b has length " +
                         std::to_string(b.size()));
  }
  return W * x + b;
}

Vector softmax(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double m = v.maxCoeff();
  Vector e = (v.array() - m).unaryExpr([](double x) { return std::exp(x); });
  return e / e.sum();
}

Vector masked_softmax(const Vector& v, const std::vector<bool>& allowed) {
  if (v.size() == 0) throw std::invalid_argument("masked_softmax: empty input");
  if (static_cast<Eigen::Index>(allowed.size()) != v.size()) {
    throw DimensionError("masked_softmax: mask length " + std::to_string(allowed.size()) +
                         " vs input length " + std::to_string(v.size()));
  }
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (allowed[static_cast<std::size_t>(i)]) m = std::max(m, v[i]);
  }
  if (!std::isfinite(m)) throw std::invalid_argument("masked_softmax: every entry masked");
  Vector out(v.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = allowed[static_cast<std::size_t>(i)] ? std::exp(v[i] - m) : 0.0;
    total += out[i];
  }
  return out / total;
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).unaryExpr([](double x) { return std::exp(x); }).sum());
}

double glorot_limit(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace dualoop
