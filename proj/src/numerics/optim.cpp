#include "dualoop/numerics/optim.hpp"

#include <cmath>

namespace dualoop {

ParamStore sgd_update(const ParamStore& params, const ParamStore& grads, double lr) {
  ParamStore out = params;
  sgd_step(out, grads, lr);
  return out;
}

void sgd_step(ParamStore& params, const ParamStore& grads, double lr) {
  params.require_same_layout(grads, "sgd_update");
  if (lr == 0.0) return;
  for (auto& e : params) e.value += lr * grads.at(e.name);
}

AdaDeltaState AdaDeltaState::fresh(const ParamStore& like, double rho, double epsilon) {
  return AdaDeltaState{like.zeros_like(), like.zeros_like(), rho, epsilon};
}

std::pair<ParamStore, AdaDeltaState> adadelta_update(const ParamStore& params,
                                                     const ParamStore& grads,
                                                     const AdaDeltaState& state) {
  ParamStore p = params;
  AdaDeltaState s = state;
  adadelta_step(p, grads, s);
  return {std::move(p), std::move(s)};
}

void adadelta_step(ParamStore& params, const ParamStore& grads, AdaDeltaState& state) {
  params.require_same_layout(grads, "adadelta_update");
  params.require_same_layout(state.accum_grad_sq, "adadelta_update (grad accumulator)");
  params.require_same_layout(state.accum_update_sq, "adadelta_update (update accumulator)");
  const double rho = state.rho;
  const double eps = state.epsilon;
  for (auto& e : params) {
    const Matrix& g = grads.at(e.name);
    Matrix& eg = state.accum_grad_sq.at(e.name);
    Matrix& ex = state.accum_update_sq.at(e.name);
    eg.array() = rho * eg.array() + (1.0 - rho) * g.array().square();
    Matrix delta = (-((ex.array() + eps).sqrt() / (eg.array() + eps).sqrt()) * g.array()).matrix();
    ex.array() = rho * ex.array() + (1.0 - rho) * delta.array().square();
    e.value += delta;
  }
}

double clip_global_norm(ParamStore& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
  return norm;
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adadelta") return OptimizerKind::AdaDelta;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected adadelta or sgd)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adadelta"; }

DescentOptimizer::DescentOptimizer(const OptimizerConfig& config, const ParamStore& like)
    : config_(config) {
  if (config_.kind == OptimizerKind::AdaDelta) {
    state_ = AdaDeltaState::fresh(like, config_.rho, config_.epsilon);
  }
}

void DescentOptimizer::step(ParamStore& params, const ParamStore& loss_grads) {
  if (config_.kind == OptimizerKind::AdaDelta) {
    adadelta_step(params, loss_grads, state_);
  } else {
    sgd_step(params, loss_grads, -config_.lr);
  }
}

}  // namespace dualoop
