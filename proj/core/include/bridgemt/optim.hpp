#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bridgemt/tensor.hpp"

namespace bridgemt {

/// Plain SGD update: theta <- theta - lr * grad for every trainable
/// parameter, then gradients are zeroed. When clip_norm > 0 the global
/// gradient norm over all given parameters is clipped to that threshold
/// before the update. Parameters whose gradient buffer was never touched
/// (they were not part of the last graph) are left unchanged.
/// Throws on non-finite gradients instead of silently skipping them.
template <typename T>
void sgd_step(const std::vector<Parameter<T>*>& params, T lr, T clip_norm = T(0));

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t entries_checked = 0;
};

/// Central finite-difference validation of the analytic gradients:
/// for each checked entry i, compares d(loss)/d(theta_i) against
/// (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps) and returns the
/// maximum of |a - n| / max(|a|, |n|, 1e-8). build_loss must rebuild the
/// graph from the current parameter values on every call. Double precision
/// only; eps must lie in [1e-6, 1e-4].
///
/// max_entries bounds the total number of probed entries: every parameter
/// is sampled with a deterministic stride so each tensor is covered even
/// when the full sweep would be too expensive (a desk-size model has
/// ~2e5 entries, and two forward passes per entry add up).
GradCheckReport grad_check(const std::function<Tensor<double>()>& build_loss,
                           const std::vector<Parameter<double>*>& params, double eps,
                           size_t max_entries = static_cast<size_t>(-1));

extern template void sgd_step(const std::vector<Parameter<float>*>&, float, float);
extern template void sgd_step(const std::vector<Parameter<double>*>&, double, double);

}  // namespace bridgemt
