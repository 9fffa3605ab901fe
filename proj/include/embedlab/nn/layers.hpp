#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "embedlab/error.hpp"
#include "embedlab/nn/tensor.hpp"
#include "embedlab/random.hpp"

namespace embedlab::nn {

inline constexpr double kLogGuard = 1e-12;

// ---------------------------------------------------------------------------
// Dense: y = W x + b
// ---------------------------------------------------------------------------

inline Tensor dense_forward(const Tensor& W, const Tensor& b, const Tensor& x) {
  if (W.rank() != 2 || b.rank() != 1 || x.rank() != 1 || W.dim(0) != b.dim(0) ||
      W.dim(1) != x.dim(0))
    throw Error("dense_forward shape mismatch: W" + shape_str(W.shape()) + " b" +
                shape_str(b.shape()) + " x" + shape_str(x.shape()));
  const std::size_t out = W.dim(0), in = W.dim(1);
  Tensor y({out});
  for (std::size_t i = 0; i < out; ++i) {
    const double* w = &W(i, 0);
    double acc = b[i];
    for (std::size_t j = 0; j < in; ++j) acc += w[j] * x[j];
    y[i] = acc;
  }
  return y;
}

struct DenseGrads {
  Tensor dW;
  Tensor db;
  Tensor dx;
};

// Adds this sample's gradients into dW and db; writes dL/dx into dx when
// given.
inline void dense_backward_accumulate(const Tensor& W, const Tensor& x, const Tensor& dy,
                                      Tensor& dW, Tensor& db, Tensor* dx) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  if (dy.size() != out || x.size() != in) throw Error("dense_backward shape mismatch");
  W.require_same_shape(dW, "dense_backward dW");
  if (dx) *dx = Tensor({in});
  for (std::size_t i = 0; i < out; ++i) {
    const double g = dy[i];
    db[i] += g;
    if (g == 0.0) continue;
    double* dw = &dW(i, 0);
    for (std::size_t j = 0; j < in; ++j) dw[j] += g * x[j];
    if (dx) {
      const double* w = &W(i, 0);
      for (std::size_t j = 0; j < in; ++j) (*dx)[j] += g * w[j];
    }
  }
}

inline DenseGrads dense_backward(const Tensor& W, const Tensor& x, const Tensor& dy) {
  DenseGrads g{Tensor(W.shape()), Tensor({W.dim(0)}), Tensor()};
  dense_backward_accumulate(W, x, dy, g.dW, g.db, &g.dx);
  return g;
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

inline Tensor relu(Tensor x) {
  for (auto& v : x.values()) v = v > 0.0 ? v : 0.0;
  return x;
}

// dx_i = dy_i where x_i > 0, else 0.
inline Tensor relu_backward(Tensor dy, const Tensor& x) {
  x.require_same_shape(dy, "relu_backward");
  for (std::size_t i = 0; i < dy.size(); ++i)
    if (!(x[i] > 0.0)) dy[i] = 0.0;
  return dy;
}

// ---------------------------------------------------------------------------
// Softmax and cross-entropy
// ---------------------------------------------------------------------------

inline Tensor softmax(Tensor z) {
  if (z.size() == 0) return z;
  const double m = *std::max_element(z.values().begin(), z.values().end());
  double sum = 0.0;
  for (auto& v : z.values()) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : z.values()) v /= sum;
  return z;
}

// -sum_i y_i log(p_i + guard)
inline double cross_entropy(const Tensor& p, const Tensor& y) {
  p.require_same_shape(y, "cross_entropy");
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (y[i] != 0.0) loss -= y[i] * std::log(p[i] + kLogGuard);
  return loss;
}

inline double cross_entropy(const Tensor& p, std::size_t target) {
  if (target >= p.size()) throw Error("cross_entropy target out of range");
  return -std::log(p[target] + kLogGuard);
}

// Gradient of cross_entropy(softmax(z), y) with respect to z, for a
// probability vector y.
inline Tensor softmax_cross_entropy_backward(Tensor p, const Tensor& y) {
  p.require_same_shape(y, "softmax_cross_entropy_backward");
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= y[i];
  return p;
}

inline Tensor softmax_cross_entropy_backward(Tensor p, std::size_t target) {
  p[target] -= 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// conv1d: valid cross-correlation along time.
//   x [T, C], kernels [F, K, C], b [F]  ->  y [T-K+1, F]
// ---------------------------------------------------------------------------

inline Tensor conv1d_forward(const Tensor& x, const Tensor& kernels, const Tensor& b) {
  if (x.rank() != 2 || kernels.rank() != 3 || b.rank() != 1 || kernels.dim(2) != x.dim(1) ||
      kernels.dim(0) != b.dim(0))
    throw Error("conv1d_forward shape mismatch: x" + shape_str(x.shape()) + " kernels" +
                shape_str(kernels.shape()) + " b" + shape_str(b.shape()));
  const std::size_t T = x.dim(0), C = x.dim(1), F = kernels.dim(0), K = kernels.dim(1);
  if (T < K)
    throw Error("conv1d input length " + std::to_string(T) + " is shorter than kernel " +
                std::to_string(K));
  const std::size_t out_len = T - K + 1;
  const std::size_t window = K * C;
  Tensor y({out_len, F});
  for (std::size_t t = 0; t < out_len; ++t) {
    // The K rows starting at t are contiguous in x.
    const double* xs = &x(t, 0);
    for (std::size_t f = 0; f < F; ++f) {
      const double* ks = &kernels(f, 0, 0);
      double acc = b[f];
      for (std::size_t q = 0; q < window; ++q) acc += ks[q] * xs[q];
      y(t, f) = acc;
    }
  }
  return y;
}

struct Conv1dGrads {
  Tensor dx;
  Tensor dkernels;
  Tensor db;
};

inline void conv1d_backward_accumulate(const Tensor& x, const Tensor& kernels, const Tensor& dy,
                                       Tensor& dkernels, Tensor& db, Tensor* dx) {
  const std::size_t T = x.dim(0), C = x.dim(1), F = kernels.dim(0), K = kernels.dim(1);
  const std::size_t out_len = T - K + 1;
  if (dy.rank() != 2 || dy.dim(0) != out_len || dy.dim(1) != F)
    throw Error("conv1d_backward shape mismatch");
  const std::size_t window = K * C;
  if (dx) *dx = Tensor(x.shape());
  for (std::size_t t = 0; t < out_len; ++t) {
    const double* xs = &x(t, 0);
    for (std::size_t f = 0; f < F; ++f) {
      const double g = dy(t, f);
      if (g == 0.0) continue;
      db[f] += g;
      double* dk = &dkernels(f, 0, 0);
      for (std::size_t q = 0; q < window; ++q) dk[q] += g * xs[q];
      if (dx) {
        const double* ks = &kernels(f, 0, 0);
        double* dxs = &(*dx)(t, 0);
        for (std::size_t q = 0; q < window; ++q) dxs[q] += g * ks[q];
      }
    }
  }
}

inline Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernels, const Tensor& dy) {
  Conv1dGrads g{Tensor(), Tensor(kernels.shape()), Tensor({kernels.dim(0)})};
  conv1d_backward_accumulate(x, kernels, dy, g.dkernels, g.db, &g.dx);
  return g;
}

// ---------------------------------------------------------------------------
// Global max pooling over time: [T, F] -> [F]
// ---------------------------------------------------------------------------

struct MaxPoolResult {
  Tensor y;
  std::vector<std::size_t> argmax;  // first occurrence on ties
};

inline MaxPoolResult global_max_pool(const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) == 0) throw Error("global_max_pool needs a non-empty [T, F] input");
  const std::size_t T = x.dim(0), F = x.dim(1);
  MaxPoolResult r{Tensor({F}), std::vector<std::size_t>(F, 0)};
  for (std::size_t f = 0; f < F; ++f) {
    double best = x(0, f);
    std::size_t arg = 0;
    for (std::size_t t = 1; t < T; ++t)
      if (x(t, f) > best) {
        best = x(t, f);
        arg = t;
      }
    r.y[f] = best;
    r.argmax[f] = arg;
  }
  return r;
}

inline Tensor global_max_pool_backward(const Tensor& dy, const std::vector<std::size_t>& argmax,
                                       std::size_t time_steps) {
  const std::size_t F = dy.size();
  if (argmax.size() != F) throw Error("global_max_pool_backward shape mismatch");
  Tensor dx({time_steps, F});
  for (std::size_t f = 0; f < F; ++f) dx(argmax[f], f) = dy[f];
  return dx;
}

// ---------------------------------------------------------------------------
// Inverted dropout
// ---------------------------------------------------------------------------

enum class Phase { Train, Eval };

struct DropoutResult {
  Tensor y;
  Tensor mask;  // per-element multiplier: 0 or 1/(1-rate); empty in eval
};

inline void check_dropout_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
}

inline DropoutResult dropout(const Tensor& x, double rate, Phase phase, Rng& rng) {
  check_dropout_rate(rate);
  if (phase == Phase::Eval || rate == 0.0) return {x, Tensor()};
  const double scale = 1.0 / (1.0 - rate);
  DropoutResult r{x, Tensor(x.shape())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : scale;
    r.mask[i] = m;
    r.y[i] = x[i] * m;
  }
  return r;
}

// An empty mask means the layer acted as the identity.
inline Tensor dropout_backward(Tensor dy, const Tensor& mask) {
  if (mask.size() == 0) return dy;
  dy.require_same_shape(mask, "dropout_backward");
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= mask[i];
  return dy;
}

}  // namespace embedlab::nn
