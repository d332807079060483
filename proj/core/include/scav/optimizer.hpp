#pragma once

#include <span>
#include <vector>

#include "scav/types.hpp"

namespace scav {

struct AdamConfig {
  double beta1 = 0.95;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct ParamRef {
  Matrix* value;
  const Matrix* grad;
  bool decay = true;  // temperatures opt out of weight decay
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// AdamW: decoupled decay p <- p * (1 - lr * wd), then the bias-corrected
/// Adam update. `step` is 1-based. State is lazily zero-initialised.
void adam_step(std::span<const ParamRef> params, AdamState& state, int step, double lr,
               const AdamConfig& cfg);

struct LrSchedule {
  double base_lr = 7e-4;
  int warmup_steps = 0;
  int total_steps = 1;
};

/// Linear warm-up from 0 to base_lr, then cosine decay to 0 at total_steps.
double cosine_lr(int step, const LrSchedule& schedule);

}  // namespace scav
