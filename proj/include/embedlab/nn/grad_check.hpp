#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "embedlab/error.hpp"

namespace embedlab::nn {

inline constexpr double kGradCheckStep = 1e-5;

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is ~0 from reporting roundoff as relative error.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Central differences of `loss` with respect to every entry of `params`,
// compared with `analytic`. `loss` must read the current contents of
// `params`. Returns the largest relative error.
inline double grad_check(const std::function<double()>& loss, std::span<double> params,
                         std::span<const double> analytic, double h = kGradCheckStep) {
  if (params.size() != analytic.size()) throw Error("grad_check: gradient length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

}  // namespace embedlab::nn
