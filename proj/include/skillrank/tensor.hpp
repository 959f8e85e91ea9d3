#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillrank/rng.hpp"

namespace skillrank::nc {

// Dense row-major tensor. Construction validates the shape/value-count
// contract and rejects non-finite values.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;

  Tensor(std::vector<std::size_t> s, std::vector<double> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (count(shape) != values.size()) {
      throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " expects " +
                                  std::to_string(count(shape)) + " values, got " +
                                  std::to_string(values.size()));
    }
    for (double x : values) {
      if (!std::isfinite(x)) throw std::invalid_argument("Tensor: non-finite value");
    }
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  static std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += "x";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::vector<double> v(count(s), 0.0);
    return Tensor(std::move(s), std::move(v));
  }

  // seeded uniform(lo, hi) fill
  static Tensor uniform(std::vector<std::size_t> s, Rng& rng, double lo, double hi) {
    std::vector<double> v(count(s));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(s), std::move(v));
  }

  std::size_t size() const { return values.size(); }

  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace skillrank::nc
