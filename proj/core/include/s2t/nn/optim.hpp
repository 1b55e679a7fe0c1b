#pragma once

#include <map>
#include <string>

#include "s2t/nn/tensor.hpp"

namespace s2t::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 1e-4;         // decoupled decay: p <- p - lr * l2 * p
  double clip_norm = 0.0;   // global gradient-norm clip; 0 disables
};

template <typename T>
struct OptimizerState {
  AdamConfig config;
  int64_t step = 0;
  std::map<std::string, Matrix<T>> first_moment;
  std::map<std::string, Matrix<T>> second_moment;
};

template <typename T>
double global_grad_norm(const ParameterSet<T>& params);

// One Adam update over every parameter; clears gradients afterwards. Throws if
// any parameter lacks a gradient.
template <typename T>
void optimizer_step(ParameterSet<T>& params, OptimizerState<T>& state);

extern template double global_grad_norm<float>(const ParameterSet<float>&);
extern template double global_grad_norm<double>(const ParameterSet<double>&);
extern template void optimizer_step<float>(ParameterSet<float>&, OptimizerState<float>&);
extern template void optimizer_step<double>(ParameterSet<double>&, OptimizerState<double>&);

}  // namespace s2t::nn
