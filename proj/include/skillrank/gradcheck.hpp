#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "skillrank/tensor.hpp"

namespace skillrank::nc {

// Central-difference gradient estimate, one coordinate at a time:
// (f(p + h e) - f(p - h e)) / 2h. Uses forward evaluation only, so it is
// independent of the reverse sweep it is used to check.
template <class F>
std::vector<Tensor> finite_difference_gradient(F&& f, std::vector<Tensor> params, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const Tensor& p : params) grads.push_back(Tensor::zeros(p.shape));
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) {
      const double orig = params[t].values[i];
      params[t].values[i] = orig + h;
      const double fp = f(params);
      params[t].values[i] = orig - h;
      const double fm = f(params);
      params[t].values[i] = orig;
      grads[t].values[i] = (fp - fm) / (2.0 * h);
    }
  }
  return grads;
}

// scale-robust relative error
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

}  // namespace skillrank::nc
