#pragma once

#include "dualoop/numerics/tensor.hpp"

namespace dualoop {

// GRU cell (Cho et al.), gates stacked row-wise as [update; reset; candidate]:
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   hc = tanh(Wc x + Uc (r*h) + bc)
//   h' = z*h + (1-z)*hc
// W is 3H x D, U is 3H x H, b is 3H x 1.

struct GruCache {
  Vector x;
  Vector h_prev;
  Vector z;
  Vector r;
  Vector rh;
  Vector cand;
  Vector h;
};

struct GruWeights {
  const Matrix& W;
  const Matrix& U;
  const Matrix& b;
};

struct GruGrads {
  Matrix& W;
  Matrix& U;
  Matrix& b;
};

Vector gru_forward(const GruWeights& w, const Vector& x, const Vector& h_prev);
void gru_forward(const GruWeights& w, const Vector& x, const Vector& h_prev, GruCache& cache);

/// Accumulates parameter gradients into `g` and writes the input and
/// previous-state gradients. `dh` is the gradient w.r.t. h'.
void gru_backward(const GruWeights& w, const GruCache& cache, const Vector& dh, GruGrads& g,
                  Vector& dx, Vector& dh_prev);

}  // namespace dualoop
