#include "bridgemt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bridgemt {

namespace {

template <typename T>
Tensor<T> make_result(std::vector<int> shape, std::vector<T> value, const std::vector<Tensor<T>>& parents,
                      std::function<void(TensorNode<T>&)> bw) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (GradMode::enabled()) {
    bool any = false;
    for (const auto& p : parents) any = any || p.node()->requires_grad;
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (const auto& p : parents) node->parents.push_back(p.node());
      node->backward_fn = std::move(bw);
    }
  }
  return Tensor<T>(node);
}

template <typename T>
bool wants_grad(const TensorNode<T>& n, size_t parent) {
  return n.parents[parent]->requires_grad;
}

template <typename T>
std::vector<T>& parent_grad(TensorNode<T>& n, size_t parent) {
  n.parents[parent]->ensure_grad();
  return n.parents[parent]->grad;
}

void check_same_shape(const std::vector<int>& a, const std::vector<int>& b, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

// C += op(A) * op(B). Loop orders chosen so the innermost index walks
// contiguous memory for the common (nn, nt) cases.
template <typename T>
void matmul_accum(const T* a, int ar, int ac, bool ta, const T* b, int br, int bc, bool tb, T* c) {
  const int m = ta ? ac : ar;
  const int k = ta ? ar : ac;
  const int n = tb ? br : bc;
  if (!ta && !tb) {
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        const T aip = a[static_cast<size_t>(i) * ac + p];
        const T* brow = b + static_cast<size_t>(p) * bc;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
  } else if (!ta && tb) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const T* arow = a + static_cast<size_t>(i) * ac;
        const T* brow = b + static_cast<size_t>(j) * bc;
        T acc = 0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c[static_cast<size_t>(i) * n + j] += acc;
      }
  } else if (ta && !tb) {
    for (int p = 0; p < k; ++p)
      for (int i = 0; i < m; ++i) {
        const T api = a[static_cast<size_t>(p) * ac + i];
        const T* brow = b + static_cast<size_t>(p) * bc;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
      }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        T acc = 0;
        for (int p = 0; p < k; ++p) acc += a[static_cast<size_t>(p) * ac + i] * b[static_cast<size_t>(j) * bc + p];
        c[static_cast<size_t>(i) * n + j] += acc;
      }
  }
}

template <typename T>
void require_2d(const Tensor<T>& t, const char* op) {
  if (t.shape().size() > 2) {
    throw std::invalid_argument(std::string(op) + ": expects a matrix, got shape " + shape_str(t.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  const int m = trans_a ? ac : ar;
  const int ka = trans_a ? ar : ac;
  const int kb = trans_b ? bc : br;
  const int n = trans_b ? br : bc;
  if (ka != kb) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                                (trans_a ? "^T" : "") + " * " + shape_str(b.shape()) + (trans_b ? "^T" : ""));
  }
  std::vector<T> out(static_cast<size_t>(m) * n, T(0));
  matmul_accum(a.data().data(), ar, ac, trans_a, b.data().data(), br, bc, trans_b, out.data());

  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(
      {m, n}, std::move(out), {a, b}, [an, bn, ar, ac, br, bc, trans_a, trans_b, m, n](TensorNode<T>& self) {
        const T* g = self.grad.data();
        if (an->requires_grad) {
          an->ensure_grad();
          // d(opA) = dC * opB^T; transpose back if A entered transposed.
          if (!trans_a) {
            matmul_accum(g, m, n, false, bn->value.data(), br, bc, !trans_b, an->grad.data());
          } else {
            matmul_accum(bn->value.data(), br, bc, trans_b, g, m, n, true, an->grad.data());
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          if (!trans_b) {
            matmul_accum(an->value.data(), ar, ac, !trans_a, g, m, n, false, bn->grad.data());
          } else {
            matmul_accum(g, m, n, true, an->value.data(), ar, ac, trans_a, bn->grad.data());
          }
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    for (size_t p = 0; p < 2; ++p) {
      if (!wants_grad(self, p)) continue;
      auto& g = parent_grad(self, p);
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a.shape(), b.shape(), "sub");
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](TensorNode<T>& self) {
    if (wants_grad(self, 0)) {
      auto& g = parent_grad(self, 0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = parent_grad(self, 1);
      for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode<T>& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

template <typename T>
Tensor<T> add_n(const std::vector<Tensor<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty operand list");
  std::vector<T> out(xs[0].data());
  for (size_t k = 1; k < xs.size(); ++k) {
    check_same_shape(xs[0].shape(), xs[k].shape(), "add_n");
    const auto& v = xs[k].data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  return make_result<T>(xs[0].shape(), std::move(out), xs, [](TensorNode<T>& self) {
    for (size_t p = 0; p < self.parents.size(); ++p) {
      if (!wants_grad(self, p)) continue;
      auto& g = parent_grad(self, p);
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data());
  for (auto& v : out) v *= factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [factor](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

template <typename T>
Tensor<T> add_col_broadcast(const Tensor<T>& x, const Tensor<T>& bias) {
  require_2d(x, "add_col_broadcast");
  const int d = x.rows(), s = x.cols();
  if (static_cast<int>(bias.numel()) != d) {
    throw std::invalid_argument("add_col_broadcast: bias size " + shape_str(bias.shape()) +
                                " does not match rows of " + shape_str(x.shape()));
  }
  std::vector<T> out(x.data());
  const auto& bv = bias.data();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < s; ++j) out[static_cast<size_t>(i) * s + j] += bv[i];
  return make_result<T>(x.shape(), std::move(out), {x, bias}, [d, s](TensorNode<T>& self) {
    if (wants_grad(self, 0)) {
      auto& g = parent_grad(self, 0);
      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = parent_grad(self, 1);
      for (int i = 0; i < d; ++i) {
        T acc = 0;
        for (int j = 0; j < s; ++j) acc += self.grad[static_cast<size_t>(i) * s + j];
        g[i] += acc;
      }
    }
  });
}

namespace {

template <typename T, typename Fwd, typename Bwd>
Tensor<T> elementwise(const Tensor<T>& x, Fwd fwd, Bwd bwd_from_out) {
  std::vector<T> out(x.numel());
  const auto& xv = x.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return make_result<T>(x.shape(), std::move(out), {x}, [bwd_from_out](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bwd_from_out(self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return elementwise(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T y) { return y > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return elementwise(
      x, [](T v) { return std::tanh(v); }, [](T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return elementwise(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, ActKind kind) {
  switch (kind) {
    case ActKind::relu: return relu(x);
    case ActKind::tanh: return tanh(x);
    case ActKind::sigmoid: return sigmoid(x);
  }
  throw std::invalid_argument("activation: unknown kind");
}

namespace {

// Shared masked-softmax kernel over one contiguous row segment.
template <typename T>
void softmax_segment(const T* x, T* y, const uint8_t* mask, int n) {
  T mx = -std::numeric_limits<T>::infinity();
  for (int j = 0; j < n; ++j)
    if (!mask || mask[j]) mx = std::max(mx, x[j]);
  T denom = 0;
  for (int j = 0; j < n; ++j) {
    if (!mask || mask[j]) {
      y[j] = std::exp(x[j] - mx);
      denom += y[j];
    } else {
      y[j] = T(0);
    }
  }
  for (int j = 0; j < n; ++j) y[j] /= denom;
  for (int j = 0; j < n; ++j)
    if (mask && !mask[j]) y[j] = T(0);  // keep masked entries exactly zero
}

// dx_j = y_j * (g_j - sum_k g_k y_k); masked entries have y_j == 0.
template <typename T>
void softmax_segment_backward(const T* y, const T* g, T* dx, int n) {
  T dot = 0;
  for (int j = 0; j < n; ++j) dot += g[j] * y[j];
  for (int j = 0; j < n; ++j) dx[j] += y[j] * (g[j] - dot);
}

}  // namespace

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, const std::vector<uint8_t>& mask) {
  require_2d(x, "softmax_rows");
  const int r = x.rows(), n = x.cols();
  if (!mask.empty()) {
    if (static_cast<int>(mask.size()) != n) {
      throw std::invalid_argument("softmax_rows: mask size " + std::to_string(mask.size()) +
                                  " does not match columns of " + shape_str(x.shape()));
    }
    if (std::find(mask.begin(), mask.end(), uint8_t(1)) == mask.end()) {
      throw std::invalid_argument("softmax_rows: all positions masked");
    }
  }
  std::vector<T> out(x.numel());
  const uint8_t* m = mask.empty() ? nullptr : mask.data();
  for (int i = 0; i < r; ++i) {
    softmax_segment(x.data().data() + static_cast<size_t>(i) * n, out.data() + static_cast<size_t>(i) * n, m, n);
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [r, n](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < r; ++i) {
      const size_t off = static_cast<size_t>(i) * n;
      softmax_segment_backward(self.value.data() + off, self.grad.data() + off, g.data() + off, n);
    }
  });
}

template <typename T>
Tensor<T> softmax_col_groups(const Tensor<T>& x, int group_width, const std::vector<uint8_t>& mask) {
  require_2d(x, "softmax_col_groups");
  const int r = x.rows(), total = x.cols();
  if (group_width <= 0 || total % group_width != 0) {
    throw std::invalid_argument("softmax_col_groups: columns " + std::to_string(total) +
                                " not divisible by group width " + std::to_string(group_width));
  }
  const int groups = total / group_width;
  if (static_cast<int>(mask.size()) != total) {
    throw std::invalid_argument("softmax_col_groups: mask size must equal column count");
  }
  for (int s = 0; s < groups; ++s) {
    bool any = false;
    for (int t = 0; t < group_width; ++t) any = any || mask[static_cast<size_t>(s) * group_width + t];
    if (!any) throw std::invalid_argument("softmax_col_groups: sentence " + std::to_string(s) + " fully masked");
  }
  std::vector<T> out(x.numel());
  for (int i = 0; i < r; ++i) {
    for (int s = 0; s < groups; ++s) {
      const size_t off = static_cast<size_t>(i) * total + static_cast<size_t>(s) * group_width;
      softmax_segment(x.data().data() + off, out.data() + off, mask.data() + static_cast<size_t>(s) * group_width,
                      group_width);
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [r, total, groups, group_width](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < r; ++i) {
      for (int s = 0; s < groups; ++s) {
        const size_t off = static_cast<size_t>(i) * total + static_cast<size_t>(s) * group_width;
        softmax_segment_backward(self.value.data() + off, self.grad.data() + off, g.data() + off, group_width);
      }
    }
  });
}

template <typename T>
Tensor<T> log_softmax_cols(const Tensor<T>& x) {
  require_2d(x, "log_softmax_cols");
  const int v = x.rows(), s = x.cols();
  std::vector<T> out(x.numel());
  const auto& xv = x.data();
  for (int j = 0; j < s; ++j) {
    T mx = -std::numeric_limits<T>::infinity();
    for (int i = 0; i < v; ++i) mx = std::max(mx, xv[static_cast<size_t>(i) * s + j]);
    T denom = 0;
    for (int i = 0; i < v; ++i) denom += std::exp(xv[static_cast<size_t>(i) * s + j] - mx);
    const T lse = mx + std::log(denom);
    for (int i = 0; i < v; ++i) out[static_cast<size_t>(i) * s + j] = xv[static_cast<size_t>(i) * s + j] - lse;
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [v, s](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int j = 0; j < s; ++j) {
      T gsum = 0;
      for (int i = 0; i < v; ++i) gsum += self.grad[static_cast<size_t>(i) * s + j];
      for (int i = 0; i < v; ++i) {
        const size_t k = static_cast<size_t>(i) * s + j;
        g[k] += self.grad[k] - std::exp(self.value[k]) * gsum;
      }
    }
  });
}

template <typename T>
Tensor<T> nll_cols(const Tensor<T>& logp, const std::vector<int32_t>& ids, const std::vector<uint8_t>& mask) {
  require_2d(logp, "nll_cols");
  const int v = logp.rows(), s = logp.cols();
  if (static_cast<int>(ids.size()) != s || static_cast<int>(mask.size()) != s) {
    throw std::invalid_argument("nll_cols: ids/mask length must equal column count");
  }
  T total = 0;
  for (int j = 0; j < s; ++j) {
    if (!mask[j]) continue;
    if (ids[j] < 0 || ids[j] >= v) {
      throw std::out_of_range("nll_cols: token id " + std::to_string(ids[j]) + " outside vocabulary of size " +
                              std::to_string(v));
    }
    total -= logp.data()[static_cast<size_t>(ids[j]) * s + j];
  }
  return make_result<T>({1}, {total}, {logp}, [ids, mask, s](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    const T go = self.grad[0];
    for (int j = 0; j < s; ++j) {
      if (mask[j]) g[static_cast<size_t>(ids[j]) * s + j] -= go;
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return make_result<T>({1}, {total}, {x}, [](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> square_sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v * v;
  auto xn = x.node();
  return make_result<T>({1}, {total}, {x}, [xn](TensorNode<T>& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    const T go = self.grad[0];
    for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += T(2) * xn->value[i] * go;
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_2d(x, "transpose");
  const int r = x.rows(), c = x.cols();
  std::vector<T> out(x.numel());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[static_cast<size_t>(j) * r + i] = x.data()[static_cast<size_t>(i) * c + j];
  return make_result<T>({c, r}, std::move(out), {x}, [r, c](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) g[static_cast<size_t>(i) * c + j] += self.grad[static_cast<size_t>(j) * r + i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(new_shape));
  }
  std::vector<T> out(x.data());
  return make_result<T>(std::move(new_shape), std::move(out), {x}, [](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a, "concat_rows");
  require_2d(b, "concat_rows");
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("concat_rows: column mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const int d1 = a.rows(), d2 = b.rows(), s = a.cols();
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  return make_result<T>({d1 + d2, s}, std::move(out), {a, b}, [d1, d2, s](TensorNode<T>& self) {
    const size_t split = static_cast<size_t>(d1) * s;
    if (wants_grad(self, 0)) {
      auto& g = parent_grad(self, 0);
      for (size_t i = 0; i < split; ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = parent_grad(self, 1);
      for (size_t i = 0; i < static_cast<size_t>(d2) * s; ++i) g[i] += self.grad[split + i];
    }
  });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, int row_begin, int row_end) {
  require_2d(x, "slice_rows");
  const int r = x.rows(), c = x.cols();
  if (row_begin < 0 || row_end > r || row_begin >= row_end) {
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(row_begin) + "," +
                                std::to_string(row_end) + ") for shape " + shape_str(x.shape()));
  }
  const int d = row_end - row_begin;
  std::vector<T> out(x.data().begin() + static_cast<size_t>(row_begin) * c,
                     x.data().begin() + static_cast<size_t>(row_end) * c);
  return make_result<T>({d, c}, std::move(out), {x}, [row_begin, c, d](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    const size_t off = static_cast<size_t>(row_begin) * c;
    for (size_t i = 0; i < static_cast<size_t>(d) * c; ++i) g[off + i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> embed_cols(const Tensor<T>& table, const std::vector<int32_t>& ids) {
  require_2d(table, "embed_cols");
  const int v = table.rows(), d = table.cols();
  const int s = static_cast<int>(ids.size());
  if (s == 0) throw std::invalid_argument("embed_cols: empty id list");
  for (int j = 0; j < s; ++j) {
    if (ids[j] < 0 || ids[j] >= v) {
      throw std::out_of_range("embed_cols: id " + std::to_string(ids[j]) + " at position " + std::to_string(j) +
                              " outside vocabulary of size " + std::to_string(v));
    }
  }
  std::vector<T> out(static_cast<size_t>(d) * s);
  for (int j = 0; j < s; ++j) {
    const T* row = table.data().data() + static_cast<size_t>(ids[j]) * d;
    for (int i = 0; i < d; ++i) out[static_cast<size_t>(i) * s + j] = row[i];
  }
  return make_result<T>({d, s}, std::move(out), {table}, [ids, d, s](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int j = 0; j < s; ++j) {
      T* row = g.data() + static_cast<size_t>(ids[j]) * d;
      for (int i = 0; i < d; ++i) row[i] += self.grad[static_cast<size_t>(i) * s + j];
    }
  });
}

template <typename T>
Tensor<T> stack_timesteps(const std::vector<Tensor<T>>& steps) {
  if (steps.empty()) throw std::invalid_argument("stack_timesteps: empty sequence");
  const int d = steps[0].rows(), s = steps[0].cols();
  const int n = static_cast<int>(steps.size());
  for (const auto& t : steps) check_same_shape(steps[0].shape(), t.shape(), "stack_timesteps");
  std::vector<T> out(static_cast<size_t>(d) * s * n);
  const int total = s * n;
  for (int t = 0; t < n; ++t) {
    const auto& v = steps[t].data();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < s; ++j)
        out[static_cast<size_t>(i) * total + static_cast<size_t>(j) * n + t] = v[static_cast<size_t>(i) * s + j];
  }
  return make_result<T>({d, total}, std::move(out), steps, [d, s, n, total](TensorNode<T>& self) {
    for (int t = 0; t < n; ++t) {
      if (!wants_grad(self, t)) continue;
      auto& g = parent_grad(self, t);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < s; ++j)
          g[static_cast<size_t>(i) * s + j] +=
              self.grad[static_cast<size_t>(i) * total + static_cast<size_t>(j) * n + t];
    }
  });
}

template <typename T>
Tensor<T> repeat_cols(const Tensor<T>& x, int k) {
  require_2d(x, "repeat_cols");
  if (k <= 0) throw std::invalid_argument("repeat_cols: k must be positive");
  const int d = x.rows(), s = x.cols();
  const int total = s * k;
  std::vector<T> out(static_cast<size_t>(d) * total);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < s; ++j) {
      const T v = x.data()[static_cast<size_t>(i) * s + j];
      for (int q = 0; q < k; ++q) out[static_cast<size_t>(i) * total + static_cast<size_t>(j) * k + q] = v;
    }
  return make_result<T>({d, total}, std::move(out), {x}, [d, s, k, total](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < s; ++j) {
        T acc = 0;
        for (int q = 0; q < k; ++q) acc += self.grad[static_cast<size_t>(i) * total + static_cast<size_t>(j) * k + q];
        g[static_cast<size_t>(i) * s + j] += acc;
      }
  });
}

template <typename T>
Tensor<T> sum_col_groups(const Tensor<T>& x, int group_width) {
  require_2d(x, "sum_col_groups");
  const int d = x.rows(), total = x.cols();
  if (group_width <= 0 || total % group_width != 0) {
    throw std::invalid_argument("sum_col_groups: columns " + std::to_string(total) + " not divisible by group width " +
                                std::to_string(group_width));
  }
  const int s = total / group_width;
  std::vector<T> out(static_cast<size_t>(d) * s, T(0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < s; ++j) {
      T acc = 0;
      for (int q = 0; q < group_width; ++q)
        acc += x.data()[static_cast<size_t>(i) * total + static_cast<size_t>(j) * group_width + q];
      out[static_cast<size_t>(i) * s + j] = acc;
    }
  return make_result<T>({d, s}, std::move(out), {x}, [d, s, group_width, total](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < s; ++j) {
        const T go = self.grad[static_cast<size_t>(i) * s + j];
        for (int q = 0; q < group_width; ++q)
          g[static_cast<size_t>(i) * total + static_cast<size_t>(j) * group_width + q] += go;
      }
  });
}

template <typename T>
Tensor<T> mean_col_groups(const Tensor<T>& x, int group_width) {
  return scale(sum_col_groups(x, group_width), T(1) / static_cast<T>(group_width));
}

template <typename T>
Tensor<T> scale_cols(const Tensor<T>& x, const Tensor<T>& weights) {
  require_2d(x, "scale_cols");
  const int d = x.rows(), c = x.cols();
  if (static_cast<int>(weights.numel()) != c) {
    throw std::invalid_argument("scale_cols: weight count " + std::to_string(weights.numel()) +
                                " does not match columns of " + shape_str(x.shape()));
  }
  std::vector<T> out(x.numel());
  const auto& w = weights.data();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<size_t>(i) * c + j] = x.data()[static_cast<size_t>(i) * c + j] * w[j];
  auto xn = x.node();
  auto wn = weights.node();
  return make_result<T>(x.shape(), std::move(out), {x, weights}, [xn, wn, d, c](TensorNode<T>& self) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < c; ++j)
          xn->grad[static_cast<size_t>(i) * c + j] += self.grad[static_cast<size_t>(i) * c + j] * wn->value[j];
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (int j = 0; j < c; ++j) {
        T acc = 0;
        for (int i = 0; i < d; ++i)
          acc += self.grad[static_cast<size_t>(i) * c + j] * xn->value[static_cast<size_t>(i) * c + j];
        wn->grad[j] += acc;
      }
    }
  });
}

template <typename T>
Tensor<T> scale_cols_const(const Tensor<T>& x, const std::vector<T>& w) {
  require_2d(x, "scale_cols_const");
  const int d = x.rows(), c = x.cols();
  if (static_cast<int>(w.size()) != c) {
    throw std::invalid_argument("scale_cols_const: weight count does not match columns");
  }
  std::vector<T> out(x.numel());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<size_t>(i) * c + j] = x.data()[static_cast<size_t>(i) * c + j] * w[j];
  return make_result<T>(x.shape(), std::move(out), {x}, [w, d, c](TensorNode<T>& self) {
    if (!wants_grad(self, 0)) return;
    auto& g = parent_grad(self, 0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < c; ++j) g[static_cast<size_t>(i) * c + j] += self.grad[static_cast<size_t>(i) * c + j] * w[j];
  });
}

template <typename T>
Tensor<T> bmm_nt_grouped(const Tensor<T>& a, const Tensor<T>& b, int group_width) {
  require_2d(a, "bmm_nt_grouped");
  require_2d(b, "bmm_nt_grouped");
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("bmm_nt_grouped: column mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const int total = a.cols();
  if (group_width <= 0 || total % group_width != 0) {
    throw std::invalid_argument("bmm_nt_grouped: columns not divisible by group width");
  }
  const int p = a.rows(), q = b.rows(), groups = total / group_width;
  const int out_cols = groups * q;
  std::vector<T> out(static_cast<size_t>(p) * out_cols, T(0));
  const auto& av = a.data();
  const auto& bv = b.data();
  for (int s = 0; s < groups; ++s) {
    for (int i = 0; i < p; ++i) {
      const T* arow = av.data() + static_cast<size_t>(i) * total + static_cast<size_t>(s) * group_width;
      for (int j = 0; j < q; ++j) {
        const T* brow = bv.data() + static_cast<size_t>(j) * total + static_cast<size_t>(s) * group_width;
        T acc = 0;
        for (int t = 0; t < group_width; ++t) acc += arow[t] * brow[t];
        out[static_cast<size_t>(i) * out_cols + static_cast<size_t>(s) * q + j] = acc;
      }
    }
  }
  auto an = a.node();
  auto bn = b.node();
  return make_result<T>(
      {p, out_cols}, std::move(out), {a, b}, [an, bn, p, q, groups, group_width, total, out_cols](TensorNode<T>& self) {
        // dA_s += dG_s * B_s ; dB_s += dG_s^T * A_s
        if (an->requires_grad) {
          an->ensure_grad();
          for (int s = 0; s < groups; ++s)
            for (int i = 0; i < p; ++i) {
              T* adst = an->grad.data() + static_cast<size_t>(i) * total + static_cast<size_t>(s) * group_width;
              for (int j = 0; j < q; ++j) {
                const T gij = self.grad[static_cast<size_t>(i) * out_cols + static_cast<size_t>(s) * q + j];
                const T* brow = bn->value.data() + static_cast<size_t>(j) * total + static_cast<size_t>(s) * group_width;
                for (int t = 0; t < group_width; ++t) adst[t] += gij * brow[t];
              }
            }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int s = 0; s < groups; ++s)
            for (int j = 0; j < q; ++j) {
              T* bdst = bn->grad.data() + static_cast<size_t>(j) * total + static_cast<size_t>(s) * group_width;
              for (int i = 0; i < p; ++i) {
                const T gij = self.grad[static_cast<size_t>(i) * out_cols + static_cast<size_t>(s) * q + j];
                const T* arow = an->value.data() + static_cast<size_t>(i) * total + static_cast<size_t>(s) * group_width;
                for (int t = 0; t < group_width; ++t) bdst[t] += gij * arow[t];
              }
            }
        }
      });
}

#define BRIDGEMT_INSTANTIATE_OPS(T)                                                             \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                    \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> add_n(const std::vector<Tensor<T>>&);                                      \
  template Tensor<T> scale(const Tensor<T>&, T);                                                \
  template Tensor<T> add_col_broadcast(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> relu(const Tensor<T>&);                                                    \
  template Tensor<T> tanh(const Tensor<T>&);                                                    \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                 \
  template Tensor<T> activation(const Tensor<T>&, ActKind);                                     \
  template Tensor<T> softmax_rows(const Tensor<T>&, const std::vector<uint8_t>&);               \
  template Tensor<T> softmax_col_groups(const Tensor<T>&, int, const std::vector<uint8_t>&);    \
  template Tensor<T> log_softmax_cols(const Tensor<T>&);                                        \
  template Tensor<T> nll_cols(const Tensor<T>&, const std::vector<int32_t>&,                    \
                              const std::vector<uint8_t>&);                                     \
  template Tensor<T> sum(const Tensor<T>&);                                                     \
  template Tensor<T> square_sum(const Tensor<T>&);                                              \
  template Tensor<T> transpose(const Tensor<T>&);                                               \
  template Tensor<T> reshape(const Tensor<T>&, std::vector<int>);                               \
  template Tensor<T> concat_rows(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> slice_rows(const Tensor<T>&, int, int);                                    \
  template Tensor<T> embed_cols(const Tensor<T>&, const std::vector<int32_t>&);                 \
  template Tensor<T> stack_timesteps(const std::vector<Tensor<T>>&);                            \
  template Tensor<T> repeat_cols(const Tensor<T>&, int);                                        \
  template Tensor<T> sum_col_groups(const Tensor<T>&, int);                                     \
  template Tensor<T> mean_col_groups(const Tensor<T>&, int);                                    \
  template Tensor<T> scale_cols(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale_cols_const(const Tensor<T>&, const std::vector<T>&);                 \
  template Tensor<T> bmm_nt_grouped(const Tensor<T>&, const Tensor<T>&, int);

BRIDGEMT_INSTANTIATE_OPS(float)
BRIDGEMT_INSTANTIATE_OPS(double)
#undef BRIDGEMT_INSTANTIATE_OPS

}  // namespace bridgemt
