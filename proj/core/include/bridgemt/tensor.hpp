#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bridgemt {

/// Dense row-major tensor participating in a reverse-mode differentiation
/// graph. The graph is define-by-run: every op records its parents and a
/// backward closure on the result node, and backward() replays them in
/// reverse topological order. Precision is a template parameter; training
/// runs in float, gradient checking in double.
template <typename T>
struct TensorNode {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily; persists on leaves across backward calls
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void(TensorNode<T>&)> backward_fn;

  size_t numel() const { return value.size(); }
  bool is_leaf() const { return parents.empty(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

/// Thread-local switch for graph recording. Inference paths (decoding,
/// validation) wrap themselves in NoGradGuard so no closures are built.
struct GradMode {
  static bool enabled();
  static void set(bool on);
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, T fill);
  static Tensor from(std::vector<int> shape, std::vector<T> data);
  static Tensor scalar(T v);
  /// Leaf tensor that accumulates gradients (a trainable parameter).
  static Tensor param(std::vector<int> shape, std::vector<T> data);

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const { return node_->shape.empty() ? 1 : node_->shape[0]; }
  int cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }
  size_t numel() const { return node_->value.size(); }

  std::vector<T>& data() { return node_->value; }
  const std::vector<T>& data() const { return node_->value; }
  T operator()(int r, int c) const { return node_->value[static_cast<size_t>(r) * cols() + c]; }
  T& at(int r, int c) { return node_->value[static_cast<size_t>(r) * cols() + c]; }

  /// Value of a one-element tensor.
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<T>& grad() const { return node_->grad; }
  std::vector<T>& grad() { return node_->grad; }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->value.size(), T(0));
  }

  /// Reverse-mode backpropagation from a scalar. Gradients accumulate into
  /// leaf tensors until explicitly zeroed; interior nodes get fresh
  /// gradients on every call.
  void backward();

  std::shared_ptr<TensorNode<T>> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

/// Named trainable tensor. Names are unique hierarchical paths whose first
/// segment identifies the owning component (a language or "bridge").
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
};

std::string shape_str(const std::vector<int>& shape);
size_t shape_numel(const std::vector<int>& shape);

extern template struct TensorNode<float>;
extern template struct TensorNode<double>;
extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace bridgemt
