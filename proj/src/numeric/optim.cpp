#include "pg2net/numeric/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pg2net/error.hpp"

namespace pg2net::numeric {

AdamState::AdamState(AdamOptions opts, std::span<const NamedTensor> params) : options(opts) {
  for (const NamedTensor& p : params) {
    first_moment.emplace_back(p.tensor.size(), 0.0);
    second_moment.emplace_back(p.tensor.size(), 0.0);
  }
}

void adam_step(std::span<NamedTensor> params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw ShapeError(fmt::format("adam_step: state tracks {} tensors, got {}", state.first_moment.size(), params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = params[k].tensor;
    if (state.first_moment[k].size() != t.size()) {
      throw ShapeError(fmt::format("adam_step: moment size mismatch for '{}'", params[k].name));
    }
    if (t.has_grad() && !all_finite(t.grad())) {
      throw NumericError(fmt::format("non-finite gradient in parameter '{}'", params[k].name));
    }
  }
  const AdamOptions& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k].tensor;
    auto w = p.mutable_data();
    const auto g = p.mutable_grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= o.learning_rate * (m_hat / (std::sqrt(v_hat) + o.epsilon) + o.weight_decay * w[i]);
    }
  }
}

double global_grad_norm(std::span<const NamedTensor> params) {
  double sq = 0.0;
  for (const NamedTensor& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

ClipReport clip_global_norm(std::span<NamedTensor> params, double max_norm) {
  if (!(max_norm > 0.0)) throw DataError(fmt::format("clip_global_norm: max_norm must be > 0, got {}", max_norm));
  ClipReport report;
  report.pre_clip_norm = global_grad_norm(params);
  if (report.pre_clip_norm > max_norm) {
    report.scale = max_norm / report.pre_clip_norm;
    for (NamedTensor& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= report.scale;
    }
  }
  return report;
}

void zero_grads(std::span<NamedTensor> params) {
  for (NamedTensor& p : params) p.tensor.zero_grad();
}

}  // namespace pg2net::numeric
