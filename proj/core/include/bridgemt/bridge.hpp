#pragma once

#include <vector>

#include "bridgemt/layers.hpp"
#include "bridgemt/ops.hpp"
#include "bridgemt/rng.hpp"
#include "bridgemt/tensor.hpp"

namespace bridgemt {

/// The shared self-attention layer joining every encoder to every decoder.
/// From encoder states H it computes head weights B = softmax(W2 relu(W1 H))
/// (softmax over positions, one distribution per head row), the fixed-size
/// sentence matrix M (heads as columns, [d_h x r]), the redundancy penalty
/// ||B B^T - I||_F^2 and the decoder initialization s0 = tanh(W_s0 mean(m_i)).
/// Exactly one instance is shared across all language pairs of a registry.
template <typename T>
struct BridgeParams {
  Tensor<T> w1;    // [d_w x d_h]
  Tensor<T> w2;    // [r x d_w]
  Tensor<T> w_s0;  // [d_h x d_h]
  int heads = 0;
  int d_w = 0;
  int d_h = 0;
};

template <typename T>
BridgeParams<T> make_bridge(int d_h, int d_w, int heads, Rng& rng);

/// Batched bridge output. m packs per-sentence head matrices side by side
/// ([d_h x S*r]); b holds per-sentence attention rows ([r x S*n]); penalty
/// is averaged over the batch so the loss ratio is batch-size invariant.
template <typename T>
struct BridgeBatch {
  Tensor<T> m;
  Tensor<T> b;
  Tensor<T> penalty;  // scalar, mean over sentences
  int batch = 0;
  int length = 0;
};

template <typename T>
BridgeBatch<T> compute_bridge_batch(const EncodedBatch<T>& enc, const BridgeParams<T>& p);

/// Single-sentence view of the bridge result.
template <typename T>
struct BridgeOutput {
  Tensor<T> m;        // [d_h x r], head i in column i
  Tensor<T> b;        // [r x n], rows sum to 1, masked positions exactly 0
  Tensor<T> penalty;  // scalar >= 0
};

template <typename T>
BridgeOutput<T> compute_bridge(const EncoderStates<T>& enc, const BridgeParams<T>& p);

/// ||B B^T - I||_F^2 for a standalone attention matrix B ([r x n]).
template <typename T>
Tensor<T> bridge_penalty(const Tensor<T>& b);

/// s0 = tanh(W_s0 * mean over head columns). Batched form takes the packed
/// [d_h x S*r] head matrix and returns [d_h x S].
template <typename T>
Tensor<T> init_decoder_state(const Tensor<T>& m, const BridgeParams<T>& p, int batch);

#define BRIDGEMT_DECLARE_BRIDGE(T)                                                            \
  extern template struct BridgeParams<T>;                                                     \
  extern template BridgeParams<T> make_bridge(int, int, int, Rng&);                           \
  extern template struct BridgeBatch<T>;                                                      \
  extern template BridgeBatch<T> compute_bridge_batch(const EncodedBatch<T>&, const BridgeParams<T>&); \
  extern template struct BridgeOutput<T>;                                                     \
  extern template BridgeOutput<T> compute_bridge(const EncoderStates<T>&, const BridgeParams<T>&); \
  extern template Tensor<T> bridge_penalty(const Tensor<T>&);                                 \
  extern template Tensor<T> init_decoder_state(const Tensor<T>&, const BridgeParams<T>&, int);

BRIDGEMT_DECLARE_BRIDGE(float)
BRIDGEMT_DECLARE_BRIDGE(double)
#undef BRIDGEMT_DECLARE_BRIDGE

}  // namespace bridgemt
