#include "rco/optim.hpp"

#include "rco/errors.hpp"

#include <string>

namespace rco {

void validate(const LrSchedule& schedule) {
  if (!(schedule.initial_lr > 0.0f)) fail(errc::config_invalid, "initial_lr must be > 0");
  if (!(schedule.drop_factor > 0.0f && schedule.drop_factor < 1.0f)) {
    fail(errc::config_invalid, "drop_factor must lie in (0, 1)");
  }
  if (schedule.total_epochs < 1) fail(errc::config_invalid, "total_epochs must be >= 1");
  int prev = -1;
  for (int e : schedule.drop_epochs) {
    if (e <= prev) fail(errc::config_invalid, "drop_epochs must be strictly increasing");
    if (e >= schedule.total_epochs) {
      fail(errc::config_invalid, "drop epoch " + std::to_string(e) + " is not below total " +
                                     std::to_string(schedule.total_epochs));
    }
    prev = e;
  }
}

float lr_at(const LrSchedule& schedule, int epoch) {
  if (epoch < 0 || epoch >= schedule.total_epochs) {
    fail(errc::invalid_argument, "epoch " + std::to_string(epoch) + " outside schedule [0, " +
                                     std::to_string(schedule.total_epochs) + ")");
  }
  float lr = schedule.initial_lr;
  for (int e : schedule.drop_epochs) {
    if (e <= epoch) lr *= schedule.drop_factor;
  }
  return lr;
}

void validate(const SgdConfig& cfg) {
  if (!(cfg.momentum >= 0.0f && cfg.momentum < 1.0f)) {
    fail(errc::config_invalid, "momentum must lie in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0f)) fail(errc::config_invalid, "weight_decay must be >= 0");
  validate(cfg.schedule);
}

namespace {

void step_tensor(Tensor& w, Tensor& v, const Tensor& g, float momentum, float weight_decay,
                 float lr) {
  if (w.empty()) return;
  for (size_t k = 0; k < w.data.size(); ++k) {
    float eff = g.data[k] + weight_decay * w.data[k];
    v.data[k] = momentum * v.data[k] + eff;
    w.data[k] -= lr * v.data[k];
  }
}

}  // namespace

void sgd_step_inplace(Params& params, Params& velocity, const Params& grads,
                      const SgdConfig& cfg, float lr) {
  if (params.weights.size() != grads.weights.size() ||
      params.weights.size() != velocity.weights.size()) {
    fail(errc::shape_mismatch, "params / grads / velocity layer counts differ");
  }
  for (size_t i = 0; i < params.weights.size(); ++i) {
    if (!same_shape(params.weights[i], grads.weights[i]) ||
        !same_shape(params.weights[i], velocity.weights[i]) ||
        !same_shape(params.biases[i], grads.biases[i]) ||
        !same_shape(params.biases[i], velocity.biases[i])) {
      fail(errc::shape_mismatch, "sgd_step shapes disagree at layer " + std::to_string(i));
    }
    step_tensor(params.weights[i], velocity.weights[i], grads.weights[i], cfg.momentum,
                cfg.weight_decay, lr);
    step_tensor(params.biases[i], velocity.biases[i], grads.biases[i], cfg.momentum,
                cfg.weight_decay, lr);
  }
}

std::pair<Params, Params> sgd_step(Params params, const Params& grads, Params velocity,
                                   const SgdConfig& cfg, float lr) {
  sgd_step_inplace(params, velocity, grads, cfg, lr);
  return {std::move(params), std::move(velocity)};
}

}  // namespace rco
