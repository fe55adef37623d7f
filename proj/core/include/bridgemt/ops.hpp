#pragma once

#include <cstdint>
#include <vector>

#include "bridgemt/tensor.hpp"

namespace bridgemt {

/// Differentiable operations over Tensor<T>. All matrices are 2-D row-major;
/// batched activations use the [features x batch] convention (one column per
/// sentence). Ops whose name mentions "groups" treat the column axis as S
/// consecutive groups of equal width, one group per sentence.

enum class ActKind { relu, tanh, sigmoid };

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false, bool trans_b = false);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> add_n(const std::vector<Tensor<T>>& xs);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// x: [d x S], bias: d entries, added to every column.
template <typename T>
Tensor<T> add_col_broadcast(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> activation(const Tensor<T>& x, ActKind kind);

/// Row-wise softmax with optional column mask (true = keep). Masked columns
/// are exactly zero in the output; logits are stabilized by max subtraction.
/// Throws if every position is masked.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, const std::vector<uint8_t>& mask = {});

/// Like softmax_rows but the column axis holds S groups of width n and the
/// softmax normalizes each (row, group) slice independently.
template <typename T>
Tensor<T> softmax_col_groups(const Tensor<T>& x, int group_width, const std::vector<uint8_t>& mask);

/// Column-wise log-softmax (one distribution per column).
template <typename T>
Tensor<T> log_softmax_cols(const Tensor<T>& x);

/// Sum of -logp[ids[j], j] over unmasked columns j. logp: [V x S].
template <typename T>
Tensor<T> nll_cols(const Tensor<T>& logp, const std::vector<int32_t>& ids, const std::vector<uint8_t>& mask);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
/// Squared Frobenius norm (sum of squared entries).
template <typename T>
Tensor<T> square_sum(const Tensor<T>& x);

template <typename T>
Tensor<T> transpose(const Tensor<T>& x);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<int> new_shape);
template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, int row_begin, int row_end);

/// Column j of the result is row ids[j] of the table. table: [V x d].
template <typename T>
Tensor<T> embed_cols(const Tensor<T>& table, const std::vector<int32_t>& ids);

/// Stack n per-timestep matrices [d x S] into [d x S*n] with sentence-major
/// columns: column s*n + t holds sentence s at time t.
template <typename T>
Tensor<T> stack_timesteps(const std::vector<Tensor<T>>& steps);

/// Column s of x repeated k times: [d x S] -> [d x S*k].
template <typename T>
Tensor<T> repeat_cols(const Tensor<T>& x, int k);
template <typename T>
Tensor<T> sum_col_groups(const Tensor<T>& x, int group_width);
template <typename T>
Tensor<T> mean_col_groups(const Tensor<T>& x, int group_width);

/// Scale column j by weights[j]; differentiable in both arguments.
template <typename T>
Tensor<T> scale_cols(const Tensor<T>& x, const Tensor<T>& weights);
/// Scale column j by the constant w[j] (no gradient into w).
template <typename T>
Tensor<T> scale_cols_const(const Tensor<T>& x, const std::vector<T>& w);

/// Per-group product A_s * B_s^T: a [p x S*n], b [q x S*n] -> [p x S*q].
template <typename T>
Tensor<T> bmm_nt_grouped(const Tensor<T>& a, const Tensor<T>& b, int group_width);

#define BRIDGEMT_DECLARE_OPS(T)                                                                        \
  extern template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                    \
  extern template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
  extern template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                   \
  extern template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                   \
  extern template Tensor<T> add_n(const std::vector<Tensor<T>>&);                                      \
  extern template Tensor<T> scale(const Tensor<T>&, T);                                                \
  extern template Tensor<T> add_col_broadcast(const Tensor<T>&, const Tensor<T>&);                     \
  extern template Tensor<T> relu(const Tensor<T>&);                                                    \
  extern template Tensor<T> tanh(const Tensor<T>&);                                                    \
  extern template Tensor<T> sigmoid(const Tensor<T>&);                                                 \
  extern template Tensor<T> activation(const Tensor<T>&, ActKind);                                     \
  extern template Tensor<T> softmax_rows(const Tensor<T>&, const std::vector<uint8_t>&);               \
  extern template Tensor<T> softmax_col_groups(const Tensor<T>&, int, const std::vector<uint8_t>&);    \
  extern template Tensor<T> log_softmax_cols(const Tensor<T>&);                                        \
  extern template Tensor<T> nll_cols(const Tensor<T>&, const std::vector<int32_t>&,                    \
                                     const std::vector<uint8_t>&);                                     \
  extern template Tensor<T> sum(const Tensor<T>&);                                                     \
  extern template Tensor<T> square_sum(const Tensor<T>&);                                              \
  extern template Tensor<T> transpose(const Tensor<T>&);                                               \
  extern template Tensor<T> reshape(const Tensor<T>&, std::vector<int>);                               \
  extern template Tensor<T> concat_rows(const Tensor<T>&, const Tensor<T>&);                           \
  extern template Tensor<T> slice_rows(const Tensor<T>&, int, int);                                    \
  extern template Tensor<T> embed_cols(const Tensor<T>&, const std::vector<int32_t>&);                 \
  extern template Tensor<T> stack_timesteps(const std::vector<Tensor<T>>&);                            \
  extern template Tensor<T> repeat_cols(const Tensor<T>&, int);                                        \
  extern template Tensor<T> sum_col_groups(const Tensor<T>&, int);                                     \
  extern template Tensor<T> mean_col_groups(const Tensor<T>&, int);                                    \
  extern template Tensor<T> scale_cols(const Tensor<T>&, const Tensor<T>&);                            \
  extern template Tensor<T> scale_cols_const(const Tensor<T>&, const std::vector<T>&);                 \
  extern template Tensor<T> bmm_nt_grouped(const Tensor<T>&, const Tensor<T>&, int);

BRIDGEMT_DECLARE_OPS(float)
BRIDGEMT_DECLARE_OPS(double)
#undef BRIDGEMT_DECLARE_OPS

}  // namespace bridgemt
