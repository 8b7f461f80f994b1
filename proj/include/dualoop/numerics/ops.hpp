#pragma once

#include "dualoop/numerics/tensor.hpp"

namespace dualoop {

/// W·x + b. Throws DimensionError on shape mismatch.
Vector affine(const Matrix& W, const Vector& x, const Vector& b);

/// Max-subtracted softmax. Throws std::invalid_argument on empty input.
Vector softmax(const Vector& v);

/// Softmax over entries where `allowed[i]` is true; disallowed entries get
/// probability exactly zero.
Vector masked_softmax(const Vector& v, const std::vector<bool>& allowed);

/// log(sum(exp(v))) computed stably.
double log_sum_exp(const Vector& v);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Xavier/Glorot uniform limit sqrt(6 / (fan_in + fan_out)).
double glorot_limit(Eigen::Index fan_in, Eigen::Index fan_out);

}  // namespace dualoop
