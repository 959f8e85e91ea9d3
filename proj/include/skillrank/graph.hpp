#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillrank/tensor.hpp"

namespace skillrank::nc {

// Reverse-mode differentiation over a trace of elementary matrix ops.
//
// Values are 2-D row-major blocks living in one flat arena; each op is
// evaluated eagerly when recorded and replayed in reverse by backward().
// The trace is topologically ordered by construction. reset() drops the
// trace but keeps arena capacity, so a Graph can be reused across batches
// without reallocating.
//
// All reductions run in index-major order, which makes results bitwise
// reproducible for a fixed build.
class Graph {
 public:
  struct Ref {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
  };

  using ParamId = std::int32_t;

  // Registers a parameter tensor. The pointer must stay valid for the
  // lifetime of the Graph; current values are snapshotted into the trace
  // the first time param() is called after a reset.
  ParamId register_param(const Tensor* t) {
    params_.push_back(t);
    param_leaf_.push_back(-1);
    return static_cast<ParamId>(params_.size() - 1);
  }

  void reset() {
    nodes_.clear();
    vals_.clear();
    args_.clear();
    std::fill(param_leaf_.begin(), param_leaf_.end(), -1);
  }

  // ----- leaves -----

  Ref input(const double* data, std::size_t rows, std::size_t cols) {
    Ref r = alloc(Op::input, rows, cols);
    std::memcpy(val_ptr(r), data, rows * cols * sizeof(double));
    return r;
  }

  Ref input(const Tensor& t) { return input(t.values.data(), t.rows(), t.cols()); }

  Ref input(std::size_t rows, std::size_t cols, const std::vector<double>& v) {
    check(v.size() == rows * cols, "input", "value count does not match shape");
    return input(v.data(), rows, cols);
  }

  Ref zeros(std::size_t rows, std::size_t cols) { return alloc(Op::input, rows, cols); }

  Ref param(ParamId pid) {
    if (param_leaf_[pid] >= 0) return Ref{param_leaf_[pid]};
    const Tensor* t = params_[pid];
    Ref r = input(t->values.data(), t->rows(), t->cols());
    nodes_[r.id].op = Op::param;
    nodes_[r.id].aux0 = pid;
    param_leaf_[pid] = r.id;
    return r;
  }

  // ----- shape accessors -----

  std::size_t rows(Ref r) const { return nodes_[r.id].rows; }
  std::size_t cols(Ref r) const { return nodes_[r.id].cols; }

  std::span<const double> values(Ref r) const {
    const Node& n = nodes_[r.id];
    return {vals_.data() + n.off, n.rows * n.cols};
  }

  double scalar(Ref r) const {
    const Node& n = nodes_[r.id];
    check(n.rows == 1 && n.cols == 1, "scalar", "node is not 1x1");
    return vals_[n.off];
  }

  // ----- ops -----

  // [m x k] . [k x n]
  Ref matmul(Ref a, Ref b) {
    const Node na = node(a), nb = node(b);
    if (na.cols != nb.rows) shape_error("matmul", na, nb);
    Ref r = alloc(Op::matmul, na.rows, nb.cols, a, b);
    const double* A = val_ptr(a);
    const double* B = val_ptr(b);
    double* C = val_ptr(r);
    const std::size_t m = na.rows, k = na.cols, n = nb.cols;
    for (std::size_t i = 0; i < m; ++i) {
      double* c = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = A[i * k + p];
        const double* brow = B + p * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
      }
    }
    return r;
  }

  // [m x k] . [n x k]^T
  Ref matmul_nt(Ref a, Ref b) {
    const Node na = node(a), nb = node(b);
    if (na.cols != nb.cols) shape_error("matmul_nt", na, nb);
    Ref r = alloc(Op::matmul_nt, na.rows, nb.rows, a, b);
    const double* A = val_ptr(a);
    const double* B = val_ptr(b);
    double* C = val_ptr(r);
    const std::size_t m = na.rows, k = na.cols, n = nb.rows;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double* arow = A + i * k;
        const double* brow = B + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        C[i * n + j] = s;
      }
    }
    return r;
  }

  // a + alpha * b; b may be a single row broadcast across a's rows
  Ref add_scaled(Ref a, Ref b, double alpha) {
    const Node na = node(a), nb = node(b);
    const bool bcast = nb.rows == 1 && na.rows > 1;
    if (na.cols != nb.cols || (!bcast && na.rows != nb.rows)) shape_error("add", na, nb);
    Ref r = alloc(Op::add_scaled, na.rows, na.cols, a, b);
    nodes_[r.id].c0 = alpha;
    const double* A = val_ptr(a);
    const double* B = val_ptr(b);
    double* C = val_ptr(r);
    const std::size_t n = na.cols;
    for (std::size_t i = 0; i < na.rows; ++i) {
      const double* brow = bcast ? B : B + i * n;
      for (std::size_t j = 0; j < n; ++j) C[i * n + j] = A[i * n + j] + alpha * brow[j];
    }
    return r;
  }

  Ref add(Ref a, Ref b) { return add_scaled(a, b, 1.0); }
  Ref sub(Ref a, Ref b) { return add_scaled(a, b, -1.0); }

  // elementwise product, same shapes
  Ref mul(Ref a, Ref b) {
    const Node na = node(a), nb = node(b);
    if (na.rows != nb.rows || na.cols != nb.cols) shape_error("mul", na, nb);
    Ref r = alloc(Op::mul, na.rows, na.cols, a, b);
    const double* A = val_ptr(a);
    const double* B = val_ptr(b);
    double* C = val_ptr(r);
    for (std::size_t i = 0, e = na.rows * na.cols; i < e; ++i) C[i] = A[i] * B[i];
    return r;
  }

  // [r x p] ++ [r x q] -> [r x (p+q)]; b may be a single row broadcast
  Ref concat_cols(Ref a, Ref b) {
    const Node na = node(a), nb = node(b);
    const bool bcast = nb.rows == 1 && na.rows > 1;
    if (!bcast && na.rows != nb.rows) shape_error("concat", na, nb);
    Ref r = alloc(Op::concat_cols, na.rows, na.cols + nb.cols, a, b);
    const double* A = val_ptr(a);
    const double* B = val_ptr(b);
    double* C = val_ptr(r);
    const std::size_t p = na.cols, q = nb.cols, w = p + q;
    for (std::size_t i = 0; i < na.rows; ++i) {
      std::memcpy(C + i * w, A + i * p, p * sizeof(double));
      std::memcpy(C + i * w + p, bcast ? B : B + i * q, q * sizeof(double));
    }
    return r;
  }

  // columns [c0, c1)
  Ref slice_cols(Ref a, std::size_t c0, std::size_t c1) {
    const Node na = node(a);
    check(c0 < c1 && c1 <= na.cols, "slice", "column range out of bounds");
    Ref r = alloc(Op::slice_cols, na.rows, c1 - c0, a);
    nodes_[r.id].aux0 = static_cast<std::int32_t>(c0);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    const std::size_t w = c1 - c0;
    for (std::size_t i = 0; i < na.rows; ++i)
      std::memcpy(C + i * w, A + i * na.cols + c0, w * sizeof(double));
    return r;
  }

  // rows picked by index, duplicates allowed (gradient scatter-adds)
  Ref gather_rows(Ref a, std::span<const std::int32_t> idx) {
    const Node na = node(a);
    for (std::int32_t i : idx)
      check(i >= 0 && static_cast<std::size_t>(i) < na.rows, "gather_rows", "row index out of range");
    Ref r = alloc(Op::gather_rows, idx.size(), na.cols, a);
    nodes_[r.id].aux0 = static_cast<std::int32_t>(args_.size());
    nodes_[r.id].aux1 = static_cast<std::int32_t>(idx.size());
    args_.insert(args_.end(), idx.begin(), idx.end());
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::memcpy(C + i * na.cols, A + idx[i] * na.cols, na.cols * sizeof(double));
    return r;
  }

  Ref slice_row(Ref a, std::int32_t i) {
    return gather_rows(a, std::span<const std::int32_t>{&i, 1});
  }

  // k single-row nodes stacked into [k x d]
  Ref stack_rows(std::span<const Ref> parts) {
    check(!parts.empty(), "stack_rows", "no rows");
    const std::size_t d = node(parts[0]).cols;
    for (Ref p : parts) {
      check(node(p).rows == 1, "stack_rows", "operand is not a single row");
      if (node(p).cols != d) shape_error("stack_rows", node(parts[0]), node(p));
    }
    Ref r = alloc(Op::stack_rows, parts.size(), d);
    nodes_[r.id].aux0 = static_cast<std::int32_t>(args_.size());
    nodes_[r.id].aux1 = static_cast<std::int32_t>(parts.size());
    for (Ref p : parts) args_.push_back(p.id);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < parts.size(); ++i)
      std::memcpy(C + i * d, val_ptr(parts[i]), d * sizeof(double));
    return r;
  }

  // column-wise mean over rows: [r x d] -> [1 x d]
  Ref mean_rows(Ref a) {
    const Node na = node(a);
    Ref r = alloc(Op::mean_rows, 1, na.cols, a);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < na.rows; ++i)
      for (std::size_t j = 0; j < na.cols; ++j) C[j] += A[i * na.cols + j];
    const double inv = 1.0 / static_cast<double>(na.rows);
    for (std::size_t j = 0; j < na.cols; ++j) C[j] *= inv;
    return r;
  }

  Ref transpose(Ref a) {
    const Node na = node(a);
    Ref r = alloc(Op::transpose, na.cols, na.rows, a);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < na.rows; ++i)
      for (std::size_t j = 0; j < na.cols; ++j) C[j * na.rows + i] = A[i * na.cols + j];
    return r;
  }

  Ref scale(Ref a, double c) {
    Ref r = unary(Op::scale, a, [c](double x) { return c * x; });
    nodes_[r.id].c0 = c;
    return r;
  }

  Ref tanh(Ref a) {
    return unary(Op::tanh_, a, [](double x) { return std::tanh(x); });
  }

  Ref sigmoid(Ref a) {
    return unary(Op::sigmoid_, a, [](double x) { return stable_sigmoid(x); });
  }

  Ref exp(Ref a) {
    return unary(Op::exp_, a, [](double x) { return std::exp(x); });
  }

  Ref log(Ref a) {
    return unary(Op::log_, a, [](double x) { return std::log(x); });
  }

  Ref softplus(Ref a) {
    return unary(Op::softplus_, a, [](double x) {
      return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    });
  }

  // row-wise softmax, max-subtracted
  Ref softmax_row(Ref a) {
    const Node na = node(a);
    Ref r = alloc(Op::softmax_row, na.rows, na.cols, a);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < na.rows; ++i) {
      const double* x = A + i * na.cols;
      double* y = C + i * na.cols;
      double m = x[0];
      for (std::size_t j = 1; j < na.cols; ++j) m = std::max(m, x[j]);
      double s = 0.0;
      for (std::size_t j = 0; j < na.cols; ++j) {
        y[j] = std::exp(x[j] - m);
        s += y[j];
      }
      const double inv = 1.0 / s;
      for (std::size_t j = 0; j < na.cols; ++j) y[j] *= inv;
    }
    return r;
  }

  // row-wise log(sum(exp(x))), max-subtracted: [r x c] -> [r x 1]
  Ref logsumexp_row(Ref a) {
    const Node na = node(a);
    Ref r = alloc(Op::logsumexp_row, na.rows, 1, a);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0; i < na.rows; ++i) {
      const double* x = A + i * na.cols;
      double m = x[0];
      for (std::size_t j = 1; j < na.cols; ++j) m = std::max(m, x[j]);
      double s = 0.0;
      for (std::size_t j = 0; j < na.cols; ++j) s += std::exp(x[j] - m);
      C[i] = m + std::log(s);
    }
    return r;
  }

  // ----- reverse sweep -----

  // Gradients of a scalar output w.r.t. every traced node; parameter
  // gradients are read back through param_grad().
  void backward(Ref out) {
    const Node no = node(out);
    if (no.rows != 1 || no.cols != 1)
      throw std::invalid_argument("backward: output must be scalar, got " + dims(no));
    grads_.assign(vals_.size(), 0.0);
    grads_[no.off] = 1.0;
    for (std::int32_t id = static_cast<std::int32_t>(nodes_.size()) - 1; id >= 0; --id) {
      backprop_node(id);
    }
  }

  // Valid after backward(); empty if the parameter never entered the trace.
  std::span<const double> param_grad(ParamId pid) const {
    std::int32_t leaf = param_leaf_[pid];
    if (leaf < 0) return {};
    const Node& n = nodes_[leaf];
    return {grads_.data() + n.off, n.rows * n.cols};
  }

  std::span<const double> grad(Ref r) const {
    const Node& n = nodes_[r.id];
    return {grads_.data() + n.off, n.rows * n.cols};
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    input, param,
    matmul, matmul_nt,
    add_scaled, mul,
    concat_cols, slice_cols, gather_rows, stack_rows,
    mean_rows, transpose, scale,
    tanh_, sigmoid_, exp_, log_, softplus_,
    softmax_row, logsumexp_row,
  };

  struct Node {
    Op op;
    std::int32_t a = -1, b = -1;
    std::uint32_t rows = 0, cols = 0;
    std::size_t off = 0;
    std::int32_t aux0 = 0, aux1 = 0;
    double c0 = 0.0;
  };

  static double stable_sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

  const Node& node(Ref r) const { return nodes_[r.id]; }

  double* val_ptr(Ref r) { return vals_.data() + nodes_[r.id].off; }
  const double* val_ptr(Ref r) const { return vals_.data() + nodes_[r.id].off; }

  static void check(bool ok, const char* op, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string(op) + ": " + msg);
  }

  static std::string dims(const Node& n) {
    return "[" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + "]";
  }

  [[noreturn]] static void shape_error(const char* op, const Node& a, const Node& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + dims(a) +
                                " and " + dims(b));
  }

  Ref alloc(Op op, std::size_t rows, std::size_t cols, Ref a = Ref{-1}, Ref b = Ref{-1}) {
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    n.rows = static_cast<std::uint32_t>(rows);
    n.cols = static_cast<std::uint32_t>(cols);
    n.off = vals_.size();
    vals_.resize(vals_.size() + rows * cols);  // zero-filled
    nodes_.push_back(n);
    return Ref{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  template <class F>
  Ref unary(Op op, Ref a, F&& f) {
    const Node na = node(a);
    Ref r = alloc(op, na.rows, na.cols, a);
    const double* A = val_ptr(a);
    double* C = val_ptr(r);
    for (std::size_t i = 0, e = na.rows * na.cols; i < e; ++i) C[i] = f(A[i]);
    return r;
  }

  void backprop_node(std::int32_t id) {
    const Node& n = nodes_[id];
    const double* gy = grads_.data() + n.off;
    const double* y = vals_.data() + n.off;
    switch (n.op) {
      case Op::input:
      case Op::param:
        return;
      case Op::matmul: {
        const Node &na = nodes_[n.a], &nb = nodes_[n.b];
        const double* A = vals_.data() + na.off;
        const double* B = vals_.data() + nb.off;
        double* dA = grads_.data() + na.off;
        double* dB = grads_.data() + nb.off;
        const std::size_t m = na.rows, k = na.cols, c = nb.cols;
        for (std::size_t i = 0; i < m; ++i) {
          const double* gyrow = gy + i * c;
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = B + p * c;
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += gyrow[j] * brow[j];
            dA[i * k + p] += s;
          }
          const double* arow = A + i * k;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* dbrow = dB + p * c;
            for (std::size_t j = 0; j < c; ++j) dbrow[j] += av * gyrow[j];
          }
        }
        return;
      }
      case Op::matmul_nt: {
        const Node &na = nodes_[n.a], &nb = nodes_[n.b];
        const double* A = vals_.data() + na.off;
        const double* B = vals_.data() + nb.off;
        double* dA = grads_.data() + na.off;
        double* dB = grads_.data() + nb.off;
        const std::size_t m = na.rows, k = na.cols, c = nb.rows;
        for (std::size_t i = 0; i < m; ++i) {
          const double* gyrow = gy + i * c;
          double* darow = dA + i * k;
          const double* arow = A + i * k;
          for (std::size_t j = 0; j < c; ++j) {
            const double g = gyrow[j];
            if (g == 0.0) continue;
            const double* brow = B + j * k;
            double* dbrow = dB + j * k;
            for (std::size_t p = 0; p < k; ++p) {
              darow[p] += g * brow[p];
              dbrow[p] += g * arow[p];
            }
          }
        }
        return;
      }
      case Op::add_scaled: {
        const Node &na = nodes_[n.a], &nb = nodes_[n.b];
        double* dA = grads_.data() + na.off;
        double* dB = grads_.data() + nb.off;
        const bool bcast = nb.rows == 1 && na.rows > 1;
        const std::size_t c = na.cols;
        for (std::size_t i = 0; i < na.rows; ++i) {
          double* dbrow = bcast ? dB : dB + i * c;
          for (std::size_t j = 0; j < c; ++j) {
            dA[i * c + j] += gy[i * c + j];
            dbrow[j] += n.c0 * gy[i * c + j];
          }
        }
        return;
      }
      case Op::mul: {
        const Node &na = nodes_[n.a], &nb = nodes_[n.b];
        const double* A = vals_.data() + na.off;
        const double* B = vals_.data() + nb.off;
        double* dA = grads_.data() + na.off;
        double* dB = grads_.data() + nb.off;
        for (std::size_t i = 0, e = na.rows * na.cols; i < e; ++i) {
          dA[i] += gy[i] * B[i];
          dB[i] += gy[i] * A[i];
        }
        return;
      }
      case Op::concat_cols: {
        const Node &na = nodes_[n.a], &nb = nodes_[n.b];
        double* dA = grads_.data() + na.off;
        double* dB = grads_.data() + nb.off;
        const bool bcast = nb.rows == 1 && na.rows > 1;
        const std::size_t p = na.cols, q = nb.cols, w = p + q;
        for (std::size_t i = 0; i < na.rows; ++i) {
          for (std::size_t j = 0; j < p; ++j) dA[i * p + j] += gy[i * w + j];
          double* dbrow = bcast ? dB : dB + i * q;
          for (std::size_t j = 0; j < q; ++j) dbrow[j] += gy[i * w + p + j];
        }
        return;
      }
      case Op::slice_cols: {
        const Node& na = nodes_[n.a];
        double* dA = grads_.data() + na.off;
        const std::size_t c0 = static_cast<std::size_t>(n.aux0), w = n.cols;
        for (std::size_t i = 0; i < n.rows; ++i)
          for (std::size_t j = 0; j < w; ++j) dA[i * na.cols + c0 + j] += gy[i * w + j];
        return;
      }
      case Op::gather_rows: {
        const Node& na = nodes_[n.a];
        double* dA = grads_.data() + na.off;
        const std::int32_t* idx = args_.data() + n.aux0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(n.aux1); ++i) {
          double* drow = dA + static_cast<std::size_t>(idx[i]) * na.cols;
          for (std::size_t j = 0; j < na.cols; ++j) drow[j] += gy[i * na.cols + j];
        }
        return;
      }
      case Op::stack_rows: {
        const std::int32_t* ids = args_.data() + n.aux0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(n.aux1); ++i) {
          double* drow = grads_.data() + nodes_[ids[i]].off;
          for (std::size_t j = 0; j < n.cols; ++j) drow[j] += gy[i * n.cols + j];
        }
        return;
      }
      case Op::mean_rows: {
        const Node& na = nodes_[n.a];
        double* dA = grads_.data() + na.off;
        const double inv = 1.0 / static_cast<double>(na.rows);
        for (std::size_t i = 0; i < na.rows; ++i)
          for (std::size_t j = 0; j < na.cols; ++j) dA[i * na.cols + j] += inv * gy[j];
        return;
      }
      case Op::transpose: {
        const Node& na = nodes_[n.a];
        double* dA = grads_.data() + na.off;
        for (std::size_t i = 0; i < na.rows; ++i)
          for (std::size_t j = 0; j < na.cols; ++j) dA[i * na.cols + j] += gy[j * na.rows + i];
        return;
      }
      case Op::scale: {
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i) dA[i] += n.c0 * gy[i];
        return;
      }
      case Op::tanh_: {
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i)
          dA[i] += gy[i] * (1.0 - y[i] * y[i]);
        return;
      }
      case Op::sigmoid_: {
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i)
          dA[i] += gy[i] * y[i] * (1.0 - y[i]);
        return;
      }
      case Op::exp_: {
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i) dA[i] += gy[i] * y[i];
        return;
      }
      case Op::log_: {
        const double* x = vals_.data() + nodes_[n.a].off;
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i) dA[i] += gy[i] / x[i];
        return;
      }
      case Op::softplus_: {
        const double* x = vals_.data() + nodes_[n.a].off;
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0, e = n.rows * n.cols; i < e; ++i)
          dA[i] += gy[i] * stable_sigmoid(x[i]);
        return;
      }
      case Op::softmax_row: {
        double* dA = grads_.data() + nodes_[n.a].off;
        for (std::size_t i = 0; i < n.rows; ++i) {
          const double* yrow = y + i * n.cols;
          const double* grow = gy + i * n.cols;
          double s = 0.0;
          for (std::size_t j = 0; j < n.cols; ++j) s += grow[j] * yrow[j];
          for (std::size_t j = 0; j < n.cols; ++j)
            dA[i * n.cols + j] += yrow[j] * (grow[j] - s);
        }
        return;
      }
      case Op::logsumexp_row: {
        const Node& na = nodes_[n.a];
        const double* x = vals_.data() + na.off;
        double* dA = grads_.data() + na.off;
        for (std::size_t i = 0; i < na.rows; ++i) {
          const double g = gy[i];
          if (g == 0.0) continue;
          for (std::size_t j = 0; j < na.cols; ++j)
            dA[i * na.cols + j] += g * std::exp(x[i * na.cols + j] - y[i]);
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<std::int32_t> args_;
  std::vector<const Tensor*> params_;
  std::vector<std::int32_t> param_leaf_;
};

}  // namespace skillrank::nc
