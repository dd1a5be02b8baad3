#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pg2net/numeric/tensor.hpp"

namespace pg2net::numeric {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-5;
};

/// Per-parameter moment estimates, aligned index-for-index with the
/// parameter list given to adam_step.
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;

  AdamState() = default;
  AdamState(AdamOptions opts, std::span<const NamedTensor> params);
};

/// Bias-corrected Adam with decoupled weight decay:
///   θ ← θ − lr·(m̂/(√v̂+ε) + λθ)
/// Throws NumericError naming the parameter if any gradient is non-finite;
/// no parameter is touched in that case.
void adam_step(std::span<NamedTensor> params, AdamState& state);

struct ClipReport {
  double pre_clip_norm = 0.0;
  double scale = 1.0;
};

/// Rescales all gradients by max_norm/‖g‖ when the global L2 norm exceeds
/// max_norm.
ClipReport clip_global_norm(std::span<NamedTensor> params, double max_norm);

double global_grad_norm(std::span<const NamedTensor> params);
void zero_grads(std::span<NamedTensor> params);

}  // namespace pg2net::numeric
