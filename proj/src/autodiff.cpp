#include "gx/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "gx/kernels.hpp"

namespace gx::ad {

namespace {

thread_local bool g_grad_enabled = true;

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

Var make(Matrix value, std::vector<Var> parents, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool track = false;
  if (g_grad_enabled)
    for (const auto& p : parents) track = track || p.requires_grad();
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

template <typename F>
Matrix map_unary(const Matrix& a, F f) {
  Matrix out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = f(a.data[i]);
  return out;
}

}  // namespace

void Var::set_requires_grad(bool on) {
  if (!node_->parents.empty()) throw std::logic_error("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
}

double Var::item() const {
  if (value().rows != 1 || value().cols != 1) throw ShapeError("item: expected 1x1, got " + value().shape_str());
  return value().data[0];
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var constant(Matrix m) {
  auto node = std::make_shared<Node>();
  node->value = std::move(m);
  return Var(std::move(node));
}

Var parameter(Matrix m) {
  auto node = std::make_shared<Node>();
  node->value = std::move(m);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var scalar(double v) { return constant(Matrix(1, 1, v)); }

// ---------------------------------------------------------------- LinearMap

LinearMap::LinearMap(int in_rows, int in_cols, int out_rows, int out_cols, std::vector<Entry> entries)
    : in_rows_(in_rows), in_cols_(in_cols), out_rows_(out_rows), out_cols_(out_cols) {
  const int n_in = in_rows * in_cols;
  const int n_out = out_rows * out_cols;
  for (const auto& e : entries)
    if (e.out < 0 || e.out >= n_out || e.in < 0 || e.in >= n_in)
      throw std::out_of_range("LinearMap: entry index out of range");
  fwd_ = build(n_out, entries, false);
  bwd_ = build(n_in, std::move(entries), true);
}

LinearMap::Csr LinearMap::build(int n_out, std::vector<Entry> entries, bool swap) {
  if (swap)
    for (auto& e : entries) std::swap(e.out, e.in);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.out != b.out ? a.out < b.out : a.in < b.in; });
  Csr csr;
  csr.ptr.assign(static_cast<std::size_t>(n_out) + 1, 0);
  for (const auto& e : entries) ++csr.ptr[static_cast<std::size_t>(e.out) + 1];
  for (int i = 0; i < n_out; ++i) csr.ptr[i + 1] += csr.ptr[i];
  csr.idx.reserve(entries.size());
  csr.w.reserve(entries.size());
  for (const auto& e : entries) {
    csr.idx.push_back(e.in);
    csr.w.push_back(e.weight);
  }
  return csr;
}

Matrix LinearMap::apply(const Matrix& x, bool transposed) const {
  const int xr = transposed ? out_rows_ : in_rows_;
  const int xc = transposed ? out_cols_ : in_cols_;
  if (x.rows != xr || x.cols != xc)
    throw ShapeError("sparse_linear: expected input " + std::to_string(xr) + "x" + std::to_string(xc) + ", got " +
                     x.shape_str());
  const Csr& m = transposed ? bwd_ : fwd_;
  Matrix out(transposed ? in_rows_ : out_rows_, transposed ? in_cols_ : out_cols_);
  kernels::csr_apply(static_cast<int>(out.size()), kernels::CsrView{m.ptr, m.idx, m.w}, x.data.data(), out.data.data());
  return out;
}

// ---------------------------------------------------------------- products

Var matmul(const Var& a, const Var& b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols == B.rows, "matmul", A, B);
  Matrix out(A.rows, B.cols);
  kernels::bmm(1, A.rows, A.cols, B.cols, A.data.data(), B.data.data(), out.data.data(), true);
  return make(std::move(out), {a, b}, [a, b](const Var&, const Var& g, const std::vector<char>& need) {
    std::vector<Var> r(2);
    if (need[0]) r[0] = matmul(g, transpose(b));
    if (need[1]) r[1] = matmul(transpose(a), g);
    return r;
  });
}

Var bmm(const Var& a, const Var& b, int nb) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (nb <= 0 || A.rows % nb != 0 || B.rows % nb != 0) throw ShapeError("bmm: rows not divisible by block count");
  const int r = A.rows / nb;
  const int k = A.cols;
  require(B.rows / nb == k, "bmm", A, B);
  const int c = B.cols;
  Matrix out(A.rows, c);
  kernels::bmm(nb, r, k, c, A.data.data(), B.data.data(), out.data.data(), false);
  return make(std::move(out), {a, b}, [a, b, nb](const Var&, const Var& g, const std::vector<char>& need) {
    std::vector<Var> res(2);
    if (need[0]) res[0] = bmm(g, block_transpose(b, nb), nb);
    if (need[1]) res[1] = bmm(block_transpose(a, nb), g, nb);
    return res;
  });
}

Var block_transpose(const Var& a, int nb) {
  const Matrix& A = a.value();
  if (nb <= 0 || A.rows % nb != 0) throw ShapeError("block_transpose: rows not divisible by block count");
  const int r = A.rows / nb;
  Matrix out(nb * A.cols, r);
  kernels::block_transpose(nb, r, A.cols, A.data.data(), out.data.data());
  return make(std::move(out), {a}, [nb](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{block_transpose(g, nb)};
  });
}

Var transpose(const Var& a) { return block_transpose(a, 1); }

// ---------------------------------------------------------------- elementwise

Var add(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "add", a.value(), b.value());
  Matrix out(a.rows(), a.cols());
  kernels::axpby(out.size(), 1.0, a.value().data.data(), 1.0, b.value().data.data(), out.data.data());
  return make(std::move(out), {a, b},
              [](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "sub", a.value(), b.value());
  Matrix out(a.rows(), a.cols());
  kernels::axpby(out.size(), 1.0, a.value().data.data(), -1.0, b.value().data.data(), out.data.data());
  return make(std::move(out), {a, b}, [](const Var&, const Var& g, const std::vector<char>& need) {
    std::vector<Var> r(2);
    r[0] = g;
    if (need[1]) r[1] = neg(g);
    return r;
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "mul", a.value(), b.value());
  Matrix out(a.rows(), a.cols());
  kernels::hadamard(out.size(), a.value().data.data(), b.value().data.data(), out.data.data());
  return make(std::move(out), {a, b}, [a, b](const Var&, const Var& g, const std::vector<char>& need) {
    std::vector<Var> r(2);
    if (need[0]) r[0] = mul(g, b);
    if (need[1]) r[1] = mul(g, a);
    return r;
  });
}

Var div(const Var& a, const Var& b) {
  require(a.value().same_shape(b.value()), "div", a.value(), b.value());
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] / b.value().data[i];
  return make(std::move(out), {a, b}, [b](const Var& self, const Var& g, const std::vector<char>& need) {
    std::vector<Var> r(2);
    if (need[0]) r[0] = div(g, b);
    if (need[1]) r[1] = neg(mul(g, div(self, b)));
    return r;
  });
}

Var scale(const Var& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = s * a.value().data[i];
  return make(std::move(out), {a},
              [s](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{scale(g, s)}; });
}

Var shift(const Var& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a.value().data[i] + s;
  return make(std::move(out), {a}, [](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{g}; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var tanh(const Var& a) {
  Matrix out(a.rows(), a.cols());
  kernels::tanh(out.size(), a.value().data.data(), out.data.data());
  return make(std::move(out), {a}, [](const Var& self, const Var& g, const std::vector<char>&) {
    // d tanh = 1 - y^2
    return std::vector<Var>{mul(g, shift(neg(mul(self, self)), 1.0))};
  });
}

Var sigmoid(const Var& a) {
  Matrix out(a.rows(), a.cols());
  kernels::sigmoid(out.size(), a.value().data.data(), out.data.data());
  return make(std::move(out), {a}, [](const Var& self, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{mul(g, mul(self, shift(neg(self), 1.0)))};
  });
}

Var exp(const Var& a) {
  Matrix out = map_unary(a.value(), [](double x) { return std::exp(x); });
  return make(std::move(out), {a},
              [](const Var& self, const Var& g, const std::vector<char>&) { return std::vector<Var>{mul(g, self)}; });
}

Var log(const Var& a) {
  Matrix out = map_unary(a.value(), [](double x) { return std::log(x); });
  return make(std::move(out), {a},
              [a](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{div(g, a)}; });
}

Var sqrt(const Var& a) {
  Matrix out = map_unary(a.value(), [](double x) { return std::sqrt(x); });
  return make(std::move(out), {a}, [](const Var& self, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{div(scale(g, 0.5), self)};
  });
}

Var square(const Var& a) { return mul(a, a); }

Var leaky_relu(const Var& a, double slope) {
  Matrix out = map_unary(a.value(), [slope](double x) { return x > 0 ? x : slope * x; });
  return make(std::move(out), {a}, [a, slope](const Var&, const Var& g, const std::vector<char>&) {
    Matrix mask = map_unary(a.value(), [slope](double x) { return x > 0 ? 1.0 : slope; });
    return std::vector<Var>{mul(g, constant(std::move(mask)))};
  });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

// ---------------------------------------------------------------- broadcasting / reductions

Var add_bias(const Var& a, const Var& bias) {
  const Matrix& A = a.value();
  const Matrix& B = bias.value();
  require(B.rows == 1 && B.cols == A.cols, "add_bias", A, B);
  Matrix out = A;
  for (int i = 0; i < A.rows; ++i) {
    double* row = out.row(i);
    for (int j = 0; j < A.cols; ++j) row[j] += B.data[j];
  }
  return make(std::move(out), {a, bias}, [](const Var&, const Var& g, const std::vector<char>& need) {
    std::vector<Var> r(2);
    r[0] = g;
    if (need[1]) r[1] = sum_rows(g);
    return r;
  });
}

Var row_sum(const Var& a) {
  const Matrix& A = a.value();
  Matrix out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += A(i, j);
    out.data[i] = s;
  }
  const int c = A.cols;
  return make(std::move(out), {a}, [c](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{broadcast_cols(g, c)};
  });
}

Var broadcast_cols(const Var& a, int cols) {
  const Matrix& A = a.value();
  if (A.cols != 1) throw ShapeError("broadcast_cols: expected a column, got " + A.shape_str());
  Matrix out(A.rows, cols);
  for (int i = 0; i < A.rows; ++i) std::fill(out.row(i), out.row(i) + cols, A.data[i]);
  return make(std::move(out), {a},
              [](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{row_sum(g)}; });
}

Var sum_rows(const Var& a) {
  const Matrix& A = a.value();
  Matrix out(1, A.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.data[j] += A(i, j);
  const int r = A.rows;
  return make(std::move(out), {a}, [r](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{broadcast_rows(g, r)};
  });
}

Var broadcast_rows(const Var& a, int rows) {
  const Matrix& A = a.value();
  if (A.rows != 1) throw ShapeError("broadcast_rows: expected a row, got " + A.shape_str());
  Matrix out(rows, A.cols);
  for (int i = 0; i < rows; ++i) std::copy(A.data.begin(), A.data.end(), out.row(i));
  return make(std::move(out), {a},
              [](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{sum_rows(g)}; });
}

Var block_sum(const Var& a, int nb) {
  const Matrix& A = a.value();
  if (nb <= 0 || A.rows % nb != 0) throw ShapeError("block_sum: rows not divisible by block count");
  const int r = A.rows / nb;
  Matrix out(nb, A.cols);
  for (int b = 0; b < nb; ++b)
    for (int i = 0; i < r; ++i) {
      const double* src = A.row(b * r + i);
      double* dst = out.row(b);
      for (int j = 0; j < A.cols; ++j) dst[j] += src[j];
    }
  return make(std::move(out), {a}, [r](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{block_broadcast(g, r)};
  });
}

Var block_broadcast(const Var& a, int r) {
  const Matrix& A = a.value();
  Matrix out(A.rows * r, A.cols);
  for (int b = 0; b < A.rows; ++b)
    for (int i = 0; i < r; ++i) std::copy(A.row(b), A.row(b) + A.cols, out.row(b * r + i));
  const int nb = A.rows;
  return make(std::move(out), {a}, [nb](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{block_sum(g, nb)};
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const int r = a.rows();
  const int c = a.cols();
  return make(Matrix(1, 1, s), {a},
              [r, c](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{fill(g, r, c)}; });
}

Var mean_all(const Var& a) {
  const auto n = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / n);
}

Var fill(const Var& s, int rows, int cols) {
  const double v = s.item();
  return make(Matrix(rows, cols, v), {s},
              [](const Var&, const Var& g, const std::vector<char>&) { return std::vector<Var>{sum_all(g)}; });
}

Var softmax_rows(const Var& a) {
  const Matrix& A = a.value();
  Matrix out(A.rows, A.cols);
  kernels::softmax_rows(A.rows, A.cols, A.data.data(), out.data.data());
  const int c = A.cols;
  return make(std::move(out), {a}, [c](const Var& self, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{mul(self, sub(g, broadcast_cols(row_sum(mul(g, self)), c)))};
  });
}

Var log_softmax_rows(const Var& a) {
  const Matrix& A = a.value();
  Matrix out(A.rows, A.cols);
  kernels::log_softmax_rows(A.rows, A.cols, A.data.data(), out.data.data());
  const int c = A.cols;
  return make(std::move(out), {a}, [c](const Var& self, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{sub(g, mul(exp(self), broadcast_cols(row_sum(g), c)))};
  });
}

Var reshape(const Var& a, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != a.value().size())
    throw ShapeError("reshape: cannot view " + a.value().shape_str() + " as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  Matrix out = a.value();
  out.rows = rows;
  out.cols = cols;
  const int r0 = a.rows();
  const int c0 = a.cols();
  return make(std::move(out), {a}, [r0, c0](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{reshape(g, r0, c0)};
  });
}

Var sparse_linear(const Var& a, const LinearMapPtr& map, bool transposed) {
  Matrix out = map->apply(a.value(), transposed);
  return make(std::move(out), {a}, [map, transposed](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{sparse_linear(g, map, !transposed)};
  });
}

Var stop_gradient(const Var& a) { return constant(a.value()); }

Var row_prod(const Var& a) {
  const Matrix& A = a.value();
  Matrix out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double p = 1.0;
    for (int j = 0; j < A.cols; ++j) p *= A(i, j);
    out.data[i] = p;
  }
  return make(std::move(out), {a}, [a](const Var&, const Var& g, const std::vector<char>&) {
    const Matrix& A = a.value();
    Matrix loo(A.rows, A.cols);
    std::vector<double> prefix(static_cast<std::size_t>(A.cols) + 1);
    for (int i = 0; i < A.rows; ++i) {
      prefix[0] = 1.0;
      for (int j = 0; j < A.cols; ++j) prefix[j + 1] = prefix[j] * A(i, j);
      double suffix = 1.0;
      for (int j = A.cols - 1; j >= 0; --j) {
        loo(i, j) = prefix[j] * suffix;
        suffix *= A(i, j);
      }
    }
    return std::vector<Var>{mul(broadcast_cols(g, A.cols), constant(std::move(loo)))};
  });
}

// ---------------------------------------------------------------- engine

std::vector<Var> grad(const Var& y, const std::vector<Var>& wrt, bool create_graph) {
  if (y.value().rows != 1 || y.value().cols != 1) throw ShapeError("grad: output must be 1x1");

  std::vector<Var> result(wrt.size());
  auto zeros_for = [&](std::size_t i) { result[i] = constant(Matrix(wrt[i].rows(), wrt[i].cols())); };
  if (!y.requires_grad()) {
    for (std::size_t i = 0; i < wrt.size(); ++i) zeros_for(i);
    return result;
  }

  // Topological order (parents before children) via iterative DFS.
  std::vector<Var> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Var, std::size_t>> stack;
  stack.emplace_back(y, 0);
  visited.insert(y.node());
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    const auto& parents = v.node()->parents;
    if (next < parents.size()) {
      const Var p = parents[next++];
      if (p.requires_grad() && visited.insert(p.node()).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(v);
      stack.pop_back();
    }
  }

  // A node needs a gradient when it lies on a path from some target to y.
  std::unordered_set<Node*> targets;
  for (const auto& w : wrt)
    if (w.defined()) targets.insert(w.node());
  std::unordered_set<Node*> needed;
  for (const auto& v : order) {
    bool n = targets.count(v.node()) > 0;
    for (const auto& p : v.node()->parents) n = n || needed.count(p.node()) > 0;
    if (n) needed.insert(v.node());
  }

  const bool prev = g_grad_enabled;
  g_grad_enabled = create_graph;
  std::unordered_map<Node*, Var> grads;
  grads[y.node()] = constant(Matrix(1, 1, 1.0));
  try {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const Var& v = *it;
      auto found = grads.find(v.node());
      if (found == grads.end() || !v.node()->backward) continue;
      const auto& parents = v.node()->parents;
      std::vector<char> need(parents.size());
      bool any = false;
      for (std::size_t i = 0; i < parents.size(); ++i) {
        need[i] = parents[i].requires_grad() && needed.count(parents[i].node()) > 0;
        any = any || need[i];
      }
      if (!any) continue;
      const Var g = found->second;
      std::vector<Var> pg = v.node()->backward(v, g, need);
      for (std::size_t i = 0; i < parents.size(); ++i) {
        if (!need[i] || i >= pg.size() || !pg[i].defined()) continue;
        auto [slot, inserted] = grads.try_emplace(parents[i].node(), pg[i]);
        if (!inserted) slot->second = add(slot->second, pg[i]);
      }
    }
  } catch (...) {
    g_grad_enabled = prev;
    throw;
  }
  g_grad_enabled = prev;

  for (std::size_t i = 0; i < wrt.size(); ++i) {
    auto found = wrt[i].defined() ? grads.find(wrt[i].node()) : grads.end();
    if (found != grads.end())
      result[i] = found->second;
    else
      zeros_for(i);
  }
  return result;
}

}  // namespace gx::ad
