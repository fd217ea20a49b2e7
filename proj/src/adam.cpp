#include "actshuf/adam.hpp"

#include <cmath>

namespace actshuf {

AdamState make_adam_state(const std::vector<ParamRef>& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const ParamRef& p : params) {
    state.first_moment.push_back(Tensor::zeros_like(*p.value));
    state.second_moment.push_back(Tensor::zeros_like(*p.value));
  }
  return state;
}

void adam_step(const std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " moment buffers");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].shape() != params[k].value->shape() ||
        state.first_moment[k].shape() != params[k].value->shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + params[k].name + "'");
    }
    if (!grads[k].all_finite()) {
      throw Error("adam_step: non-finite gradient for parameter '" + params[k].name + "'");
    }
  }

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& x = *params[k].value;
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      x[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace actshuf
