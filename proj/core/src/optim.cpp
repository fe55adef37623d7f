#include "bridgemt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace bridgemt {

template <typename T>
void sgd_step(const std::vector<Parameter<T>*>& params, T lr, T clip_norm) {
  double sq_norm = 0.0;
  for (const Parameter<T>* p : params) {
    if (!p->trainable) continue;
    const auto& g = p->tensor.grad();
    for (T v : g) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw std::runtime_error("sgd_step: non-finite gradient in parameter '" + p->name + "'");
      }
      sq_norm += static_cast<double>(v) * static_cast<double>(v);
    }
  }
  T factor = lr;
  if (clip_norm > T(0)) {
    const double norm = std::sqrt(sq_norm);
    if (norm > static_cast<double>(clip_norm)) {
      factor = lr * static_cast<T>(static_cast<double>(clip_norm) / norm);
    }
  }
  for (Parameter<T>* p : params) {
    if (!p->trainable) continue;
    auto& g = p->tensor.grad();
    if (g.empty()) continue;
    auto& v = p->tensor.data();
    for (size_t i = 0; i < v.size(); ++i) v[i] -= factor * g[i];
    p->tensor.zero_grad();
  }
}

GradCheckReport grad_check(const std::function<Tensor<double>()>& build_loss,
                           const std::vector<Parameter<double>*>& params, double eps, size_t max_entries) {
  if (eps < 1e-6 || eps > 1e-4) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  for (Parameter<double>* p : params) p->tensor.zero_grad();

  Tensor<double> loss = build_loss();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  size_t total = 0;
  for (Parameter<double>* p : params) {
    p->tensor.node()->ensure_grad();
    analytic.push_back(p->tensor.grad());
    total += p->tensor.numel();
  }

  const size_t budget = std::max<size_t>(1, max_entries);
  GradCheckReport report;
  NoGradGuard no_grad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>* p = params[pi];
    const size_t n = p->tensor.numel();
    // Proportional share of the budget, with a floor so tiny tensors
    // (biases) are always probed.
    size_t share = std::max<size_t>(4, budget * n / std::max<size_t>(1, total));
    const size_t stride = std::max<size_t>(1, n / std::min(n, share));
    auto& values = p->tensor.data();
    for (size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double f_plus = build_loss().item();
      values[i] = saved - eps;
      const double f_minus = build_loss().item();
      values[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
        throw std::runtime_error("grad_check: non-finite loss when perturbing parameter '" + p->name + "'");
      }
      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      if (!std::isfinite(a)) {
        throw std::runtime_error("grad_check: non-finite analytic gradient in parameter '" + p->name + "'");
      }
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++report.entries_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p->name;
        report.worst_index = i;
      }
    }
  }
  for (Parameter<double>* p : params) p->tensor.zero_grad();
  return report;
}

template void sgd_step(const std::vector<Parameter<float>*>&, float, float);
template void sgd_step(const std::vector<Parameter<double>*>&, double, double);

}  // namespace bridgemt
