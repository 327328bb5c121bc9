#pragma once

#include <cstddef>
#include <vector>

#include "slt/nn.hpp"

namespace slt {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// First/second moment buffers aligned with a ParameterSet's order.
struct AdamWState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamWState zeros_like(const ParameterSet& params);
};

// One update with decoupled decay: p -= lr * wd * p, then
// p -= lr * m_hat / (sqrt(v_hat) + eps). Parameters without a gradient are
// left untouched. Throws NumericError naming the parameter on a non-finite
// gradient.
void adamw_step(ParameterSet& params, AdamWState& state, double lr, const AdamWOptions& options);

// Linear 0 -> peak over warmup_steps, then linear peak -> 0 at total_steps;
// 0 beyond total_steps.
double lr_schedule(std::size_t step, double peak, std::size_t warmup_steps,
                   std::size_t total_steps);

// Global L2 norm of all parameter gradients.
double grad_norm(const ParameterSet& params);
// Scales gradients so the global norm is at most max_norm; returns the norm
// before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

// Rounds every parameter to the nearest float32 value.
void round_to_float(ParameterSet& params);

}  // namespace slt
