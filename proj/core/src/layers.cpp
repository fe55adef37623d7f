#include "bridgemt/layers.hpp"

#include <stdexcept>

namespace bridgemt {

namespace {

template <typename T>
std::vector<T> uniform_init(size_t n, Rng& rng, T range) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-static_cast<double>(range), static_cast<double>(range)));
  return v;
}

}  // namespace

template <typename T>
LstmCellParams<T> make_lstm_cell(int input_size, int hidden_size, Rng& rng, T init_range) {
  LstmCellParams<T> p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_x = Tensor<T>::param({4 * hidden_size, input_size},
                           uniform_init<T>(static_cast<size_t>(4 * hidden_size) * input_size, rng, init_range));
  p.w_h = Tensor<T>::param({4 * hidden_size, hidden_size},
                           uniform_init<T>(static_cast<size_t>(4 * hidden_size) * hidden_size, rng, init_range));
  std::vector<T> b(static_cast<size_t>(4 * hidden_size), T(0));
  for (int i = hidden_size; i < 2 * hidden_size; ++i) b[i] = T(1);  // forget gate
  p.bias = Tensor<T>::param({4 * hidden_size, 1}, std::move(b));
  return p;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& x, const Tensor<T>& h, const Tensor<T>& c,
                                          const LstmCellParams<T>& p) {
  const int d = p.hidden_size;
  Tensor<T> gates = add_col_broadcast(add(matmul(p.w_x, x), matmul(p.w_h, h)), p.bias);
  Tensor<T> i_gate = sigmoid(slice_rows(gates, 0, d));
  Tensor<T> f_gate = sigmoid(slice_rows(gates, d, 2 * d));
  Tensor<T> g_cand = tanh(slice_rows(gates, 2 * d, 3 * d));
  Tensor<T> o_gate = sigmoid(slice_rows(gates, 3 * d, 4 * d));
  Tensor<T> c_next = add(mul(f_gate, c), mul(i_gate, g_cand));
  Tensor<T> h_next = mul(o_gate, tanh(c_next));
  return {h_next, c_next};
}

template <typename T>
EncoderParams<T> make_encoder(int vocab, int d_x, int d_h, int num_layers, Rng& rng) {
  if (d_h % 2 != 0) throw std::invalid_argument("make_encoder: d_h must be even");
  EncoderParams<T> p;
  p.d_x = d_x;
  p.d_h = d_h;
  p.embedding = Tensor<T>::param({vocab, d_x}, uniform_init<T>(static_cast<size_t>(vocab) * d_x, rng, T(0.1)));
  const int half = d_h / 2;
  for (int l = 0; l < num_layers; ++l) {
    const int in = l == 0 ? d_x : d_h;
    typename EncoderParams<T>::Layer layer;
    layer.fwd = make_lstm_cell<T>(in, half, rng);
    layer.bwd = make_lstm_cell<T>(in, half, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

template <typename T>
EncodedBatch<T> encode_batch_states(const std::vector<int32_t>& ids, int batch, int length,
                                    const std::vector<uint8_t>& mask, const EncoderParams<T>& p) {
  if (batch <= 0 || length <= 0) throw std::invalid_argument("encode: empty sequence");
  if (ids.size() != static_cast<size_t>(batch) * length || mask.size() != ids.size()) {
    throw std::invalid_argument("encode: ids/mask size does not match batch x length");
  }
  const int half = p.d_h / 2;

  // Per-timestep embeddings, [d_x x S] each.
  std::vector<Tensor<T>> inputs(length);
  std::vector<std::vector<T>> step_mask(length, std::vector<T>(batch));
  for (int t = 0; t < length; ++t) {
    std::vector<int32_t> col(batch);
    for (int s = 0; s < batch; ++s) {
      col[s] = ids[static_cast<size_t>(s) * length + t];
      step_mask[t][s] = static_cast<T>(mask[static_cast<size_t>(s) * length + t]);
    }
    inputs[t] = embed_cols(p.embedding, col);
  }

  std::vector<Tensor<T>> fwd_states, bwd_states;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    fwd_states.assign(length, Tensor<T>());
    bwd_states.assign(length, Tensor<T>());

    Tensor<T> h = Tensor<T>::zeros({half, batch});
    Tensor<T> c = Tensor<T>::zeros({half, batch});
    for (int t = 0; t < length; ++t) {
      auto [hn, cn] = lstm_cell(inputs[t], h, c, layer.fwd);
      // Zeroing the carried state at padded positions keeps real columns
      // identical regardless of padding width.
      h = scale_cols_const(hn, step_mask[t]);
      c = scale_cols_const(cn, step_mask[t]);
      fwd_states[t] = h;
    }
    h = Tensor<T>::zeros({half, batch});
    c = Tensor<T>::zeros({half, batch});
    for (int t = length - 1; t >= 0; --t) {
      auto [hn, cn] = lstm_cell(inputs[t], h, c, layer.bwd);
      h = scale_cols_const(hn, step_mask[t]);
      c = scale_cols_const(cn, step_mask[t]);
      bwd_states[t] = h;
    }
    if (l + 1 < p.layers.size()) {
      for (int t = 0; t < length; ++t) inputs[t] = concat_rows(fwd_states[t], bwd_states[t]);
    }
  }

  std::vector<Tensor<T>> top(length);
  for (int t = 0; t < length; ++t) top[t] = concat_rows(fwd_states[t], bwd_states[t]);

  EncodedBatch<T> out;
  out.states = stack_timesteps(top);
  out.mask = mask;
  out.batch = batch;
  out.length = length;
  return out;
}

template <typename T>
EncoderStates<T> encode(const std::vector<int32_t>& ids, const EncoderParams<T>& p) {
  if (ids.empty()) throw std::invalid_argument("encode: empty sequence");
  std::vector<uint8_t> mask(ids.size(), 1);
  auto batch = encode_batch_states(ids, 1, static_cast<int>(ids.size()), mask, p);
  return {batch.states, std::move(mask)};
}

#define BRIDGEMT_INSTANTIATE_LAYERS(T)                                                                  \
  template struct LstmCellParams<T>;                                                                    \
  template LstmCellParams<T> make_lstm_cell(int, int, Rng&, T);                                         \
  template std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>&, const Tensor<T>&,                \
                                                     const Tensor<T>&, const LstmCellParams<T>&);        \
  template struct EncoderParams<T>;                                                                     \
  template EncoderParams<T> make_encoder(int, int, int, int, Rng&);                                     \
  template struct EncodedBatch<T>;                                                                      \
  template EncodedBatch<T> encode_batch_states(const std::vector<int32_t>&, int, int,                   \
                                               const std::vector<uint8_t>&, const EncoderParams<T>&);   \
  template struct EncoderStates<T>;                                                                     \
  template EncoderStates<T> encode(const std::vector<int32_t>&, const EncoderParams<T>&);

BRIDGEMT_INSTANTIATE_LAYERS(float)
BRIDGEMT_INSTANTIATE_LAYERS(double)
#undef BRIDGEMT_INSTANTIATE_LAYERS

}  // namespace bridgemt
