#include "dualoop/numerics/grad_check.hpp"

#include "dualoop/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dualoop {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradReport grad_check(const ScalarObjective& f, const ParamStore& analytic, const ParamStore& params,
                      const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  params.require_same_layout(analytic, "grad_check");

  GradReport report;
  report.tolerance = options.tolerance;
  ParamStore probe = params;
  Rng rng(options.seed);

  for (auto& entry : probe) {
    Matrix& value = entry.value;
    const Matrix& grad = analytic.at(entry.name);
    const auto total = static_cast<std::size_t>(value.size());

    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.sample_per_param && *options.sample_per_param < total) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(*options.sample_per_param);
      std::sort(coords.begin(), coords.end());
    }

    GradReport::ParamResult result;
    result.name = entry.name;
    for (std::size_t flat : coords) {
      const auto row = static_cast<Eigen::Index>(flat) / value.cols();
      const auto col = static_cast<Eigen::Index>(flat) % value.cols();
      const double saved = value(row, col);
      auto central = [&](double h) {
        value(row, col) = saved + h;
        const double plus = f(probe);
        value(row, col) = saved - h;
        const double minus = f(probe);
        value(row, col) = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
          throw NumericError("grad_check: non-finite objective at " + entry.name + "(" +
                             std::to_string(row) + "," + std::to_string(col) + ")");
        }
        return (plus - minus) / (2.0 * h);
      };
      const double numeric = options.extrapolate
                                 ? (4.0 * central(0.5 * options.step) - central(options.step)) / 3.0
                                 : central(options.step);
      const double err = relative_error(grad(row, col), numeric);
      ++result.checked;
      if (err > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = err;
        result.worst_row = row;
        result.worst_col = col;
        result.analytic = grad(row, col);
        result.numeric = numeric;
      }
    }
    if (result.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = result.max_rel_error;
      report.worst_param = result.name;
      report.worst_row = result.worst_row;
      report.worst_col = result.worst_col;
    }
    report.params.push_back(std::move(result));
  }
  report.pass = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace dualoop
