#pragma once

#include "rco/net.hpp"

#include <utility>
#include <vector>

namespace rco {

/// Step schedule: lr(epoch) = initial_lr * drop_factor^(#drop_epochs <= epoch).
/// Epochs are 0-based here (the epoch about to run).
struct LrSchedule {
  float initial_lr = 0.05f;
  std::vector<int> drop_epochs;
  float drop_factor = 0.1f;
  int total_epochs = 1;
};

void validate(const LrSchedule& schedule);
float lr_at(const LrSchedule& schedule, int epoch);

struct SgdConfig {
  float momentum = 0.9f;
  float weight_decay = 0.0f;
  LrSchedule schedule;
};

void validate(const SgdConfig& cfg);

/// g' = g + weight_decay * w;  v' = momentum * v + g';  w' = w - lr * v'.
void sgd_step_inplace(Params& params, Params& velocity, const Params& grads,
                      const SgdConfig& cfg, float lr);

std::pair<Params, Params> sgd_step(Params params, const Params& grads, Params velocity,
                                   const SgdConfig& cfg, float lr);

}  // namespace rco
