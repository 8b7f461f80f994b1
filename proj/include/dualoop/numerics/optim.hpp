#pragma once

#include "dualoop/numerics/tensor.hpp"

#include <string>
#include <string_view>
#include <utility>

namespace dualoop {

/// params + lr * grads (ascent, as in the dual updates).
ParamStore sgd_update(const ParamStore& params, const ParamStore& grads, double lr);
void sgd_step(ParamStore& params, const ParamStore& grads, double lr);

struct AdaDeltaState {
  ParamStore accum_grad_sq;
  ParamStore accum_update_sq;
  double rho = 0.95;
  double epsilon = 1e-6;

  static AdaDeltaState fresh(const ParamStore& like, double rho = 0.95, double epsilon = 1e-6);
};

/// One AdaDelta step in descent form on loss gradients `grads`.
std::pair<ParamStore, AdaDeltaState> adadelta_update(const ParamStore& params,
                                                     const ParamStore& grads,
                                                     const AdaDeltaState& state);
void adadelta_step(ParamStore& params, const ParamStore& grads, AdaDeltaState& state);

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(ParamStore& grads, double max_norm);

enum class OptimizerKind { AdaDelta, Sgd };

OptimizerKind parse_optimizer(std::string_view name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdaDelta;
  double lr = 0.1;  // SGD only
  double rho = 0.95;
  double epsilon = 1e-6;
};

/// Descent-form optimizer over loss gradients, owning its AdaDelta state.
class DescentOptimizer {
 public:
  DescentOptimizer(const OptimizerConfig& config, const ParamStore& like);
  void step(ParamStore& params, const ParamStore& loss_grads);

 private:
  OptimizerConfig config_;
  AdaDeltaState state_;
};

}  // namespace dualoop
