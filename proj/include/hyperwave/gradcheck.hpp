#pragma once

#include <string>
#include <vector>

#include "hyperwave/autodiff.hpp"

namespace hyperwave {

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
  bool pass = false;
};

// Finite-difference validation of every differentiable operation plus the
// end-to-end losses on toy hypergraphs. `inject_error` adds a deliberately
// non-reproducible case so the failure path of the reporting machinery can be
// exercised.
std::vector<GradCheckCase> run_gradcheck_suite(double tol = 1e-4,
                                               bool inject_error = false);

}  // namespace hyperwave
