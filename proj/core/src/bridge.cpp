#include "bridgemt/bridge.hpp"

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
BridgeParams<T> make_bridge(int d_h, int d_w, int heads, Rng& rng) {
  BridgeParams<T> p;
  p.d_h = d_h;
  p.d_w = d_w;
  p.heads = heads;
  p.w1 = Tensor<T>::param({d_w, d_h}, uniform_init<T>(static_cast<size_t>(d_w) * d_h, rng, T(0.1)));
  p.w2 = Tensor<T>::param({heads, d_w}, uniform_init<T>(static_cast<size_t>(heads) * d_w, rng, T(0.1)));
  p.w_s0 = Tensor<T>::param({d_h, d_h}, uniform_init<T>(static_cast<size_t>(d_h) * d_h, rng, T(0.1)));
  return p;
}

template <typename T>
BridgeBatch<T> compute_bridge_batch(const EncodedBatch<T>& enc, const BridgeParams<T>& p) {
  if (enc.batch <= 0 || enc.length <= 0) throw std::invalid_argument("compute_bridge: empty input");
  const int r = p.heads;
  const int s = enc.batch;

  Tensor<T> logits = matmul(p.w2, relu(matmul(p.w1, enc.states)));       // [r x S*n]
  Tensor<T> b = softmax_col_groups(logits, enc.length, enc.mask);        // per-sentence masked softmax
  Tensor<T> m = bmm_nt_grouped(enc.states, b, enc.length);               // per sentence H_s B_s^T -> [d_h x S*r]
  Tensor<T> gram = bmm_nt_grouped(b, b, enc.length);                     // [r x S*r]

  // Tiled identity blocks, one per sentence.
  std::vector<T> eye(static_cast<size_t>(r) * s * r, T(0));
  for (int g = 0; g < s; ++g)
    for (int i = 0; i < r; ++i) eye[static_cast<size_t>(i) * (s * r) + static_cast<size_t>(g) * r + i] = T(1);
  Tensor<T> identity = Tensor<T>::from({r, s * r}, std::move(eye));

  BridgeBatch<T> out;
  out.m = m;
  out.b = b;
  out.penalty = scale(square_sum(sub(gram, identity)), T(1) / static_cast<T>(s));
  out.batch = s;
  out.length = enc.length;
  return out;
}

template <typename T>
BridgeOutput<T> compute_bridge(const EncoderStates<T>& enc, const BridgeParams<T>& p) {
  EncodedBatch<T> batch;
  batch.states = enc.states;
  batch.mask = enc.mask;
  batch.batch = 1;
  batch.length = enc.states.cols();
  auto bb = compute_bridge_batch(batch, p);
  return {bb.m, bb.b, bb.penalty};
}

template <typename T>
Tensor<T> bridge_penalty(const Tensor<T>& b) {
  const int r = b.rows();
  Tensor<T> gram = matmul(b, b, false, true);
  std::vector<T> eye(static_cast<size_t>(r) * r, T(0));
  for (int i = 0; i < r; ++i) eye[static_cast<size_t>(i) * r + i] = T(1);
  return square_sum(sub(gram, Tensor<T>::from({r, r}, std::move(eye))));
}

template <typename T>
Tensor<T> init_decoder_state(const Tensor<T>& m, const BridgeParams<T>& p, int batch) {
  if (m.cols() % std::max(1, batch) != 0) {
    throw std::invalid_argument("init_decoder_state: head matrix width not divisible by batch");
  }
  const int r = m.cols() / batch;
  if (r != p.heads) {
    throw std::invalid_argument("init_decoder_state: expected " + std::to_string(p.heads) + " heads, got " +
                                std::to_string(r));
  }
  Tensor<T> mean = mean_col_groups(m, r);  // [d_h x S]
  return tanh(matmul(p.w_s0, mean));
}

#define BRIDGEMT_INSTANTIATE_BRIDGE(T)                                                      \
  template struct BridgeParams<T>;                                                          \
  template BridgeParams<T> make_bridge(int, int, int, Rng&);                                \
  template struct BridgeBatch<T>;                                                           \
  template BridgeBatch<T> compute_bridge_batch(const EncodedBatch<T>&, const BridgeParams<T>&); \
  template struct BridgeOutput<T>;                                                          \
  template BridgeOutput<T> compute_bridge(const EncoderStates<T>&, const BridgeParams<T>&); \
  template Tensor<T> bridge_penalty(const Tensor<T>&);                                      \
  template Tensor<T> init_decoder_state(const Tensor<T>&, const BridgeParams<T>&, int);

BRIDGEMT_INSTANTIATE_BRIDGE(float)
BRIDGEMT_INSTANTIATE_BRIDGE(double)
#undef BRIDGEMT_INSTANTIATE_BRIDGE

}  // namespace bridgemt
