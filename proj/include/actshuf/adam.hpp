#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actshuf/tensor.hpp"

namespace actshuf {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Moment buffers for a fixed, ordered list of parameters.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// A named view of one parameter tensor for the optimizer.
struct ParamRef {
  std::string name;
  Tensor* value;
};

AdamState make_adam_state(const std::vector<ParamRef>& params, AdamConfig config);

/// One bias-corrected Adam update. Throws if any gradient is non-finite,
/// naming the parameter; parameters are untouched in that case.
void adam_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
               AdamState& state);

}  // namespace actshuf
