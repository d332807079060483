#include "scav/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scav {

void adam_step(std::span<const ParamRef> params, AdamState& state, int step, double lr,
               const AdamConfig& cfg) {
  if (step < 1) throw InvalidArgument("Adam step index is 1-based");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      state.v.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (state.m.size() != params.size()) throw InvalidArgument("optimizer state does not match params");

  const double bc1 = 1.0 - std::pow(cfg.beta1, step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, step);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k].value;
    const Matrix& g = *params[k].grad;
    if (g.rows() != p.rows() || g.cols() != p.cols())
      throw InvalidArgument("gradient shape does not match parameter");
    if (params[k].decay && cfg.weight_decay != 0.0) p *= 1.0 - lr * cfg.weight_decay;
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    p.array() -= lr * (state.m[k].array() / bc1) / ((state.v[k].array() / bc2).sqrt() + cfg.eps);
  }
}

double cosine_lr(int step, const LrSchedule& s) {
  if (s.total_steps < 1) throw InvalidArgument("schedule needs total_steps >= 1");
  step = std::clamp(step, 0, s.total_steps);
  if (s.warmup_steps > 0 && step <= s.warmup_steps)
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  const int span = s.total_steps - s.warmup_steps;
  if (span <= 0) return s.base_lr;
  const double progress = static_cast<double>(step - s.warmup_steps) / static_cast<double>(span);
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace scav
