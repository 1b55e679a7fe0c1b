#pragma once

#include <functional>
#include <string>

#include "s2t/nn/tape.hpp"

namespace s2t::nn {

struct GradCheckOptions {
  double eps = 1e-6;
  // Coordinates checked per tensor; <= 0 checks all of them.
  int max_per_tensor = 0;
  uint64_t seed = 0;
  // Denominator floor for |a - n| / max(|a|, |n|, floor). Central differences
  // in double carry 1e-10..1e-9 of round-off at eps 1e-6, so near-zero
  // gradients are held to an absolute error of floor * tolerance instead.
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int64_t checked = 0;
};

// `forward` must build the loss on the tape it is given and return it as a
// 1x1 value. Parameters are perturbed in place and restored.
using LossFn = std::function<Var(Tape<double>&)>;

GradCheckResult grad_check(const LossFn& forward, ParameterSet<double>& params,
                           const GradCheckOptions& options = {});

}  // namespace s2t::nn
