#include "dualoop/numerics/gru.hpp"

namespace dualoop {

namespace {

void check_shapes(const GruWeights& w, const Vector& x, const Vector& h_prev) {
  const auto H = h_prev.size();
  if (w.W.rows() != 3 * H || w.U.rows() != 3 * H || w.U.cols() != H || w.b.rows() != 3 * H ||
      w.W.cols() != x.size()) {
    throw DimensionError("gru: W " + shape_string(w.W) + ", U " + shape_string(w.U) + ", b " +
                         shape_string(w.b) + " incompatible with input " +
                         std::to_string(x.size()) + " and state " + std::to_string(H));
  }
}

}  // namespace

void gru_forward(const GruWeights& w, const Vector& x, const Vector& h_prev, GruCache& c) {
  check_shapes(w, x, h_prev);
  const auto H = h_prev.size();
  Vector gx = w.W * x + w.b.col(0);
  Vector zr = gx.head(2 * H) + w.U.topRows(2 * H) * h_prev;
  c.z = zr.head(H).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  c.r = zr.tail(H).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  c.rh = c.r.cwiseProduct(h_prev);
  c.cand = (gx.tail(H) + w.U.bottomRows(H) * c.rh).array().tanh();
  c.h = c.z.cwiseProduct(h_prev) + (1.0 - c.z.array()).matrix().cwiseProduct(c.cand);
  c.x = x;
  c.h_prev = h_prev;
}

Vector gru_forward(const GruWeights& w, const Vector& x, const Vector& h_prev) {
  GruCache c;
  gru_forward(w, x, h_prev, c);
  return std::move(c.h);
}

void gru_backward(const GruWeights& w, const GruCache& c, const Vector& dh, GruGrads& g, Vector& dx,
                  Vector& dh_prev) {
  const auto H = c.h.size();
  Vector da(3 * H);
  // update gate
  da.head(H) = dh.cwiseProduct(c.h_prev - c.cand).cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
  // candidate
  da.tail(H) = dh.cwiseProduct((1.0 - c.z.array()).matrix())
                   .cwiseProduct((1.0 - c.cand.array().square()).matrix());
  const Vector drh = w.U.bottomRows(H).transpose() * da.tail(H);
  // reset gate
  da.segment(H, H) = drh.cwiseProduct(c.h_prev).cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));

  g.W.noalias() += da * c.x.transpose();
  g.U.topRows(2 * H).noalias() += da.head(2 * H) * c.h_prev.transpose();
  g.U.bottomRows(H).noalias() += da.tail(H) * c.rh.transpose();
  g.b.col(0) += da;

  dx.noalias() = w.W.transpose() * da;
  dh_prev = dh.cwiseProduct(c.z) + drh.cwiseProduct(c.r);
  dh_prev.noalias() += w.U.topRows(2 * H).transpose() * da.head(2 * H);
}

}  // namespace dualoop
