#pragma once

#include "dualoop/numerics/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dualoop {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// When set, checks this many coordinates drawn uniformly per tensor.
  std::optional<std::size_t> sample_per_param;
  /// Combine central differences at step and step/2 as (4 D(h/2) - D(h)) / 3,
  /// cancelling the h^2 term so a larger step (less roundoff) can be used.
  bool extrapolate = false;
  std::uint64_t seed = 0;
};

struct GradReport {
  struct ParamResult {
    std::string name;
    double max_rel_error = 0.0;
    Eigen::Index worst_row = 0;
    Eigen::Index worst_col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
  };

  std::vector<ParamResult> params;
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  double tolerance = 0.0;
  bool pass = true;
};

using ScalarObjective = std::function<double(const ParamStore&)>;

/// Compares `analytic` against central differences of `f` around `params`.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradReport grad_check(const ScalarObjective& f, const ParamStore& analytic,
                      const ParamStore& params, const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric);

}  // namespace dualoop
