#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "skillrank/tensor.hpp"

namespace skillrank::nc {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter moment accumulators plus the shared step counter.
struct AdamState {
  AdamConfig cfg;
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState init(const std::vector<Tensor>& params, AdamConfig cfg) {
    AdamState s;
    s.cfg = cfg;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

// One bias-corrected update over all parameters. grads[i] may be empty
// (treated as all-zero) but otherwise must match the parameter's size.
inline void adam_step(std::vector<Tensor>& params,
                      std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  state.t += 1;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values;
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto g = grads[i];
    if (!g.empty() && g.size() != p.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch at parameter " +
                                  std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

// single-tensor convenience
inline void adam_step(Tensor& param, std::span<const double> grad, AdamState& state) {
  std::vector<Tensor> ps{param};
  std::vector<std::span<const double>> gs{grad};
  adam_step(ps, gs, state);
  param = std::move(ps[0]);
}

}  // namespace skillrank::nc
