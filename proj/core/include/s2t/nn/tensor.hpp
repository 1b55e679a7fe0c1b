#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "s2t/common.hpp"

namespace s2t::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named weight. Values are stored as a matrix whose column count is the
// last dimension and whose row count is the product of the others.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  Matrix<T> value;
  Matrix<T> grad;  // empty until a gradient is accumulated

  Tensor() = default;
  explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
    value = Matrix<T>::Zero(matrix_rows(shape), shape.empty() ? 1 : shape.back());
  }

  static Eigen::Index matrix_rows(const std::vector<int>& dims) {
    if (dims.size() <= 1) return 1;
    return std::accumulate(dims.begin(), dims.end() - 1, Eigen::Index{1}, std::multiplies<>());
  }

  int64_t numel() const { return value.size(); }
  bool has_grad() const { return grad.size() == value.size() && grad.size() != 0; }
  void zero_grad() { grad = Matrix<T>::Zero(value.rows(), value.cols()); }
  void clear_grad() { grad.resize(0, 0); }
};

// Name-ordered collection of tensors. std::map keeps iteration order
// deterministic and element addresses stable.
template <typename T>
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  Tensor<T>& add(const std::string& name, std::vector<int> shape) {
    auto [it, inserted] = tensors_.emplace(name, Tensor<T>(std::move(shape)));
    if (!inserted) throw InvalidArgument("duplicate parameter name: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InvalidArgument("unknown parameter: " + name);
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw InvalidArgument("unknown parameter: " + name);
    return it->second;
  }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  size_t size() const { return tensors_.size(); }

  int64_t num_elements() const {
    int64_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : tensors_) t.zero_grad();
  }
  void clear_grad() {
    for (auto& [_, t] : tensors_) t.clear_grad();
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [name, t] : tensors_) {
      auto& dst = out.add(name, t.shape);
      dst.value = t.value.template cast<U>();
    }
    return out;
  }

 private:
  Map tensors_;
};

}  // namespace s2t::nn
