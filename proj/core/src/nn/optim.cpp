#include "s2t/nn/optim.hpp"

#include <cmath>

namespace s2t::nn {

template <typename T>
double global_grad_norm(const ParameterSet<T>& params) {
  double sq = 0.0;
  for (const auto& [_, t] : params) {
    if (t.has_grad()) sq += t.grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

template <typename T>
void optimizer_step(ParameterSet<T>& params, OptimizerState<T>& state) {
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw InvalidArgument("optimizer_step: parameter '" + name + "' has no gradient");
  }
  const AdamConfig& c = state.config;
  double clip = 1.0;
  if (c.clip_norm > 0.0) {
    double norm = global_grad_norm(params);
    if (norm > c.clip_norm) clip = c.clip_norm / norm;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T decay = static_cast<T>(1.0 - c.lr * c.l2);
  for (auto& [name, t] : params) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() == 0) m = Matrix<T>::Zero(t.value.rows(), t.value.cols());
    if (v.size() == 0) v = Matrix<T>::Zero(t.value.rows(), t.value.cols());
    Matrix<T> g = t.grad * static_cast<T>(clip);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    if (c.l2 != 0.0) t.value *= decay;
    const T step = static_cast<T>(c.lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(c.eps);
    t.value.array() -= step * m.array() / ((v.array() * inv_bc2).sqrt() + eps);
    t.clear_grad();
  }
}

template double global_grad_norm<float>(const ParameterSet<float>&);
template double global_grad_norm<double>(const ParameterSet<double>&);
template void optimizer_step<float>(ParameterSet<float>&, OptimizerState<float>&);
template void optimizer_step<double>(ParameterSet<double>&, OptimizerState<double>&);

}  // namespace s2t::nn
