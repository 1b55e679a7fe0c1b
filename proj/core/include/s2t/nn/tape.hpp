#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "s2t/nn/tensor.hpp"

namespace s2t::nn {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager reverse-mode tape. Every op computes its value immediately and, when
// gradients are being recorded and some input needs them, pushes a closure
// that propagates the node's gradient into its parents.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix<T> value);
  // Leaf bound to a parameter; one node per tensor per tape. The tensor's
  // value must outlive the tape and stay unchanged while it is in use.
  Var parameter(Tensor<T>& tensor);

  const Matrix<T>& value(Var v) const {
    const Node& n = node(v);
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  // Gradient of `v` after backward(); empty if none reached it.
  const Matrix<T>& grad(Var v) const { return node(v).grad; }
  size_t size() const { return nodes_.size(); }

  // Record a computed value. `parents` decide whether a gradient is needed.
  Var push(Matrix<T> value, std::initializer_list<Var> parents, BackwardFn fn);
  Var push(Matrix<T> value, const std::vector<Var>& parents, BackwardFn fn);

  // Zero-initialized gradient buffer for a parent, or nullptr when the parent
  // does not require a gradient. Only valid during backward().
  Matrix<T>* grad_buffer(Var v);
  const Matrix<T>& grad_of_self(int self) const { return nodes_[static_cast<size_t>(self)].grad; }

  // Seeds d(loss)/d(loss) = 1, runs every recorded closure in reverse order
  // and adds parameter-leaf gradients into their tensors' grad storage.
  void backward(Var loss);

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    BackwardFn backward;
    Tensor<T>* param = nullptr;
    bool requires_grad = false;
    const Matrix<T>* external = nullptr;  // parameter leaves alias the tensor
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  template <typename Range>
  Var push_impl(Matrix<T> value, const Range& parents, BackwardFn fn);

  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor<T>*, int> param_nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace s2t::nn
