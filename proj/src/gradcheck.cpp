#include "slt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slt/rng.hpp"

namespace slt {

GradCheckResult grad_check(const ScalarFunction& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
  std::vector<Tensor> work = inputs;
  for (Tensor& t : work) t.zero_grad();

  Tensor y = f(work);
  backward(y);

  std::vector<std::vector<double>> analytic(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!work[i].requires_grad()) continue;
    if (work[i].has_grad()) {
      analytic[i].assign(work[i].grad().begin(), work[i].grad().end());
    } else {
      analytic[i].assign(work[i].numel(), 0.0);
    }
  }

  GradCheckResult result;
  Rng rng = derive_rng(options.seed, {0x67726164ULL});
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (!work[i].requires_grad()) continue;
    std::vector<std::size_t> coords(work[i].numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_input && coords.size() > options.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_input);
      std::sort(coords.begin(), coords.end());
    }
    auto values = work[i].mutable_data();
    for (std::size_t c : coords) {
      const double saved = values[c];
      // Divide by the step actually taken after rounding.
      const double hi = saved + options.eps;
      const double lo = saved - options.eps;
      values[c] = hi;
      const double plus = f(work).item();
      values[c] = lo;
      const double minus = f(work).item();
      values[c] = saved;
      const double numeric = (plus - minus) / (hi - lo);
      const double a = analytic[i][c];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double err = std::abs(a - numeric) / denom;
      ++result.coords_checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        result.worst_input = i;
        result.worst_coord = c;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  for (Tensor& t : work) t.zero_grad();
  result.passed = result.max_rel_error < options.tol;
  return result;
}

}  // namespace slt
