#pragma once

#include <cmath>
#include <cstdint>

#include "embedlab/nn/tensor.hpp"

namespace embedlab::nn {

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const Shape& shape, const AdamOptions& o)
      : m(shape), v(shape), lr(o.lr), beta1(o.beta1), beta2(o.beta2), epsilon(o.epsilon) {}
};

// Bias-corrected Adam update; increments state.t.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& s) {
  param.require_same_shape(grad, "adam_step grad");
  param.require_same_shape(s.m, "adam_step state");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  auto p = param.data();
  auto g = grad.data();
  auto m = s.m.data();
  auto v = s.v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace embedlab::nn
