#include "s2t/nn/tape.hpp"

namespace s2t::nn {

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw InvalidArgument("invalid tape variable");
  return nodes_[static_cast<size_t>(v.id)];
}

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw InvalidArgument("invalid tape variable");
  return nodes_[static_cast<size_t>(v.id)];
}

template <typename T>
Var Tape<T>::constant(Matrix<T> value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, nullptr});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::parameter(Tensor<T>& tensor) {
  auto it = param_nodes_.find(&tensor);
  if (it != param_nodes_.end()) return Var{it->second};
  nodes_.push_back(Node{{}, {}, {}, &tensor, record_, &tensor.value});
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&tensor, id);
  return Var{id};
}

template <typename T>
template <typename Range>
Var Tape<T>::push_impl(Matrix<T> value, const Range& parents, BackwardFn fn) {
  bool needs = false;
  if (record_) {
    for (Var p : parents) needs = needs || node(p).requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(fn) : BackwardFn{}, nullptr, needs, nullptr});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::push(Matrix<T> value, std::initializer_list<Var> parents, BackwardFn fn) {
  return push_impl(std::move(value), parents, std::move(fn));
}

template <typename T>
Var Tape<T>::push(Matrix<T> value, const std::vector<Var>& parents, BackwardFn fn) {
  return push_impl(std::move(value), parents, std::move(fn));
}

template <typename T>
Matrix<T>* Tape<T>::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0) {
    const Matrix<T>& val = n.external ? *n.external : n.value;
    n.grad = Matrix<T>::Zero(val.rows(), val.cols());
  }
  return &n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (nodes_.empty() || !loss.valid()) throw InvalidArgument("backward called before any forward pass");
  if (!record_) throw InvalidArgument("backward on a tape that does not record gradients");
  if (backward_done_) throw InvalidArgument("backward already ran on this tape");
  Node& root = node(loss);
  const Matrix<T>& root_value = value(loss);
  if (root_value.rows() != 1 || root_value.cols() != 1) {
    throw InvalidArgument("backward requires a scalar loss");
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  root.grad = Matrix<T>::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.param && n.grad.size() != 0) {
      if (n.param->has_grad()) {
        n.param->grad += n.grad;
      } else {
        n.param->grad = n.grad;
      }
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace s2t::nn
