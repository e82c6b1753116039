#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Var is a handle to a node in a define-by-run graph. Each op records a
// backward function that maps the output gradient to parent gradients using
// the same differentiable ops, so `grad(..., create_graph = true)` yields
// gradients that can themselves be differentiated (needed by the gradient
// penalty of the critic loss).

#include <functional>
#include <memory>
#include <vector>

#include "gx/tensor.hpp"

namespace gx::ad {

class Var;
struct Node;

/// need[i] tells the backward function whether parent i wants a gradient.
/// Entries of the returned vector may be left undefined for parents that
/// receive no gradient.
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad, const std::vector<char>& need)>;

struct Node {
  Matrix value;
  bool requires_grad = false;
  std::vector<Var> parents;
  BackwardFn backward;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  [[nodiscard]] bool defined() const { return static_cast<bool>(node_); }
  [[nodiscard]] const Matrix& value() const { return node_->value; }
  /// Leaves only; used by optimizers to update parameters in place.
  Matrix& mutable_value() { return node_->value; }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on);
  [[nodiscard]] int rows() const { return node_->value.rows; }
  [[nodiscard]] int cols() const { return node_->value.cols; }
  [[nodiscard]] double item() const;
  [[nodiscard]] Node* node() const { return node_.get(); }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Var constant(Matrix m);
Var parameter(Matrix m);
Var scalar(double v);

/// Sparse linear map between flattened matrices, y = M x, with its transpose
/// precomputed so the adjoint is another application of the same map.
class LinearMap {
 public:
  struct Entry {
    int out;
    int in;
    double weight;
  };

  LinearMap(int in_rows, int in_cols, int out_rows, int out_cols, std::vector<Entry> entries);

  [[nodiscard]] int in_rows() const { return in_rows_; }
  [[nodiscard]] int in_cols() const { return in_cols_; }
  [[nodiscard]] int out_rows() const { return out_rows_; }
  [[nodiscard]] int out_cols() const { return out_cols_; }
  [[nodiscard]] Matrix apply(const Matrix& x, bool transposed) const;

 private:
  struct Csr {
    std::vector<int> ptr;
    std::vector<int> idx;
    std::vector<double> w;
  };
  static Csr build(int n_out, std::vector<Entry> entries, bool swap);

  int in_rows_, in_cols_, out_rows_, out_cols_;
  Csr fwd_, bwd_;
};

using LinearMapPtr = std::shared_ptr<const LinearMap>;

// Products.
Var matmul(const Var& a, const Var& b);
/// Block product: a holds nb blocks of r x k, b holds nb blocks of k x c.
Var bmm(const Var& a, const Var& b, int nb);
Var transpose(const Var& a);
Var block_transpose(const Var& a, int nb);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var shift(const Var& a, double s);
Var neg(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);

// Broadcasting and reductions.
Var add_bias(const Var& a, const Var& bias);
Var row_sum(const Var& a);
Var broadcast_cols(const Var& a, int cols);
Var sum_rows(const Var& a);
Var broadcast_rows(const Var& a, int rows);
/// Sums each block of rows: (nb*r) x c -> nb x c.
Var block_sum(const Var& a, int nb);
/// Repeats each row r times: nb x c -> (nb*r) x c.
Var block_broadcast(const Var& a, int r);
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var fill(const Var& scalar_var, int rows, int cols);

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);

Var reshape(const Var& a, int rows, int cols);
Var sparse_linear(const Var& a, const LinearMapPtr& map, bool transposed = false);
Var stop_gradient(const Var& a);

/// Product over each row (m x n -> m x 1). Differentiable to first order
/// only; its backward uses a constant leave-one-out product.
Var row_prod(const Var& a);

/// Gradients of the scalar `y` with respect to `wrt`. With `create_graph`
/// the returned gradients are themselves part of a differentiable graph.
/// Inputs that `y` does not depend on receive zero matrices.
std::vector<Var> grad(const Var& y, const std::vector<Var>& wrt, bool create_graph = false);

}  // namespace gx::ad
