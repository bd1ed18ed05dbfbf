#pragma once

#include <cmath>
#include <vector>

#include "routelab/tensor.hpp"

namespace routelab::ad {

// Standard Adam with bias correction. Moment buffers are indexed in step
// with the parameter list passed to init().
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  void init(const std::vector<Tensor>& params) {
    step = 0;
    first_moment.clear();
    second_moment.clear();
    for (const Tensor& p : params) {
      first_moment.emplace_back(p.value().size(), 0.0);
      second_moment.emplace_back(p.value().size(), 0.0);
    }
  }
};

inline void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw StateError("adam: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (const Tensor& p : params) {
    if (!p.has_grad()) throw StateError("adam: parameter has no gradient buffer");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value_mut();
    const auto& grad = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != value.size()) throw StateError("adam: moment buffer shape mismatch");
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      value[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

inline void zero_grads(std::vector<Tensor>& params) {
  for (Tensor& p : params) p.zero_grad();
}

}  // namespace routelab::ad
