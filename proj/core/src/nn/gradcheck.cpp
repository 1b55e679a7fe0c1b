#include "s2t/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace s2t::nn {

namespace {

double evaluate(const LossFn& forward, bool record) {
  Tape<double> tape(record);
  Var loss = forward(tape);
  const auto& v = tape.value(loss);
  if (v.rows() != 1 || v.cols() != 1) throw InvalidArgument("grad_check requires a scalar loss");
  return v(0, 0);
}

}  // namespace

GradCheckResult grad_check(const LossFn& forward, ParameterSet<double>& params,
                           const GradCheckOptions& options) {
  params.clear_grad();
  {
    Tape<double> tape;
    Var loss = forward(tape);
    if (tape.value(loss).rows() != 1 || tape.value(loss).cols() != 1) {
      throw InvalidArgument("grad_check requires a scalar loss");
    }
    tape.backward(loss);
  }

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (auto& [name, tensor] : params) {
    const int64_t n = tensor.numel();
    std::vector<int64_t> coords(static_cast<size_t>(n));
    std::iota(coords.begin(), coords.end(), int64_t{0});
    if (options.max_per_tensor > 0 && n > options.max_per_tensor) {
      portable_shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<size_t>(options.max_per_tensor));
    }
    for (int64_t idx : coords) {
      double& p = tensor.value.data()[idx];
      const double saved = p;
      p = saved + options.eps;
      const double up = evaluate(forward, false);
      p = saved - options.eps;
      const double down = evaluate(forward, false);
      p = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = tensor.has_grad() ? tensor.grad.data()[idx] : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_parameter = name;
        result.worst_index = idx;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace s2t::nn
