#include "bridgemt/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace bridgemt {

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimension must be positive, got " + shape_str(shape));
    n *= static_cast<size_t>(d);
  }
  return n;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(std::vector<int> shape) {
  return full(std::move(shape), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::full(std::vector<int> shape, T fill) {
  auto node = std::make_shared<TensorNode<T>>();
  node->value.assign(shape_numel(shape), fill);
  node->shape = std::move(shape);
  return Tensor<T>(node);
}

template <typename T>
Tensor<T> Tensor<T>::from(std::vector<int> shape, std::vector<T> data) {
  if (shape_numel(shape) != data.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  return Tensor<T>(node);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T v) {
  return from({1}, {v});
}

template <typename T>
Tensor<T> Tensor<T>::param(std::vector<int> shape, std::vector<T> data) {
  Tensor<T> t = from(std::move(shape), std::move(data));
  t.node()->requires_grad = true;
  return t;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() requires a one-element tensor, shape is " + shape_str(shape()));
  }
  return node_->value[0];
}

template <typename T>
void Tensor<T>::backward() {
  if (numel() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, shape is " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;  // graph does not reach any parameter

  // Iterative post-order over the requires_grad subgraph.
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next_child] = stack.back();
    if (next_child < n->parents.size()) {
      TensorNode<T>* p = n->parents[next_child++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Interior gradients are recomputed per call; leaf gradients accumulate
  // until zero_grad, so two backward passes double every leaf gradient.
  for (TensorNode<T>* n : order) {
    if (n->is_leaf()) {
      n->ensure_grad();
    } else {
      n->grad.assign(n->value.size(), T(0));
    }
  }
  node_->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

template struct TensorNode<float>;
template struct TensorNode<double>;
template class Tensor<float>;
template class Tensor<double>;

}  // namespace bridgemt
