#pragma once

// Finite-difference checks over every differentiable operation and the
// composed training losses, shared by the CLI and the acceptance runner.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slt/gradcheck.hpp"

namespace slt {

struct GradCheckCase {
  std::string name;
  bool composite = false;  // composites are held to 1e-4, single ops to 1e-5
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

std::vector<GradCheckCase> gradient_suite();

}  // namespace slt
