#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "slt/tensor.hpp"

namespace slt {

struct GradCheckOptions {
  double eps = 1e-6;
  double tol = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  // near-zero gradient entries from turning round-off into large ratios.
  double floor = 1e-3;
  // 0 checks every coordinate; otherwise a seeded random subset per input.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
  bool passed = false;
};

using ScalarFunction = std::function<Tensor(const std::vector<Tensor>&)>;

// Compares backward() gradients of `f` against central finite differences
// (f(x+eps) - f(x-eps)) / (2 eps) for every checked coordinate of every input
// that requires grad.
GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace slt
