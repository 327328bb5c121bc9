#include "slt/optim.hpp"

#include <cmath>

#include "slt/errors.hpp"

namespace slt {

AdamWState AdamWState::zeros_like(const ParameterSet& params) {
  AdamWState s;
  for (const Tensor& t : params.tensors()) {
    s.m.emplace_back(t.numel(), 0.0);
    s.v.emplace_back(t.numel(), 0.0);
  }
  return s;
}

void adamw_step(ParameterSet& params, AdamWState& state, double lr, const AdamWOptions& options) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("optimizer state tracks " + std::to_string(state.m.size()) +
                     " parameters, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensors()[i];
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in '" + params.names()[i] + "' at step " +
                           std::to_string(state.step + 1));
      }
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params.tensors()[i];
    if (!t.has_grad()) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != t.numel() || v.size() != t.numel()) {
      throw ShapeError("optimizer state for '" + params.names()[i] + "' has the wrong size");
    }
    auto p = t.mutable_data();
    auto g = t.grad();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = options.beta1 * m[k] + (1.0 - options.beta1) * g[k];
      v[k] = options.beta2 * v[k] + (1.0 - options.beta2) * g[k] * g[k];
      p[k] -= lr * options.weight_decay * p[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

double lr_schedule(std::size_t step, double peak, std::size_t warmup_steps,
                   std::size_t total_steps) {
  if (step >= total_steps) return 0.0;
  if (step < warmup_steps) {
    return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  return peak * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup_steps);
}

double grad_norm(const ParameterSet& params) {
  double sq = 0.0;
  for (const Tensor& t : params.tensors()) {
    for (double g : t.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (const Tensor& t : params.tensors()) {
      if (!t.has_grad()) continue;
      for (double& g : t.impl()->grad) g *= factor;
    }
  }
  return norm;
}

void round_to_float(ParameterSet& params) {
  for (const Tensor& c : params.tensors()) {
    Tensor t = c;
    for (double& x : t.mutable_data()) x = static_cast<double>(static_cast<float>(x));
  }
}

}  // namespace slt
