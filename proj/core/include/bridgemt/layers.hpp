#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bridgemt/ops.hpp"
#include "bridgemt/rng.hpp"
#include "bridgemt/tensor.hpp"

namespace bridgemt {

/// One LSTM cell. Gate weights are stacked row-wise in the order
/// input, forget, candidate, output, so w_x is [4d x d_in], w_h is [4d x d]
/// and bias is [4d x 1]. The forget-gate rows of the bias start at 1.0.
template <typename T>
struct LstmCellParams {
  Tensor<T> w_x, w_h, bias;
  int input_size = 0;
  int hidden_size = 0;
};

template <typename T>
LstmCellParams<T> make_lstm_cell(int input_size, int hidden_size, Rng& rng, T init_range = T(0.1));

/// Batched LSTM step. x: [d_in x S], h/c: [d x S]. Returns (h', c').
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& x, const Tensor<T>& h, const Tensor<T>& c,
                                          const LstmCellParams<T>& p);

/// Token embeddings plus L stacked bidirectional LSTM layers. Each
/// direction has hidden size d_h/2 so concatenation restores d_h.
template <typename T>
struct EncoderParams {
  Tensor<T> embedding;  // [V x d_x]
  struct Layer {
    LstmCellParams<T> fwd, bwd;
  };
  std::vector<Layer> layers;
  int d_x = 0;
  int d_h = 0;
};

template <typename T>
EncoderParams<T> make_encoder(int vocab, int d_x, int d_h, int num_layers, Rng& rng);

/// Top-layer states for a batch, stored sentence-major: column s*n + t is
/// sentence s at position t. Recurrent states are reset to zero at padded
/// positions, so each direction effectively starts at the sentence's true
/// boundary and the unpadded columns are independent of how much padding
/// the batch carries.
template <typename T>
struct EncodedBatch {
  Tensor<T> states;  // [d_h x S*n]
  std::vector<uint8_t> mask;
  int batch = 0;
  int length = 0;
};

template <typename T>
EncodedBatch<T> encode_batch_states(const std::vector<int32_t>& ids, int batch, int length,
                                    const std::vector<uint8_t>& mask, const EncoderParams<T>& p);

/// Single-sentence convenience wrapper (batch of one, no padding).
template <typename T>
struct EncoderStates {
  Tensor<T> states;  // [d_h x n]
  std::vector<uint8_t> mask;
};

template <typename T>
EncoderStates<T> encode(const std::vector<int32_t>& ids, const EncoderParams<T>& p);

#define BRIDGEMT_DECLARE_LAYERS(T)                                                                      \
  extern template struct LstmCellParams<T>;                                                             \
  extern template LstmCellParams<T> make_lstm_cell(int, int, Rng&, T);                                  \
  extern template std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>&, const Tensor<T>&,         \
                                                            const Tensor<T>&, const LstmCellParams<T>&); \
  extern template struct EncoderParams<T>;                                                              \
  extern template EncoderParams<T> make_encoder(int, int, int, int, Rng&);                              \
  extern template struct EncodedBatch<T>;                                                               \
  extern template EncodedBatch<T> encode_batch_states(const std::vector<int32_t>&, int, int,            \
                                                      const std::vector<uint8_t>&, const EncoderParams<T>&); \
  extern template struct EncoderStates<T>;                                                              \
  extern template EncoderStates<T> encode(const std::vector<int32_t>&, const EncoderParams<T>&);

BRIDGEMT_DECLARE_LAYERS(float)
BRIDGEMT_DECLARE_LAYERS(double)
#undef BRIDGEMT_DECLARE_LAYERS

}  // namespace bridgemt
