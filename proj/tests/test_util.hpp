#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "gx/autodiff.hpp"

namespace gx::testing {

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (auto& v : m.data) v = u(rng);
  return m;
}

/// Central finite differences of a scalar function of one matrix.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x.data[i];
    x.data[i] = keep + h;
    const double up = f(x);
    x.data[i] = keep - h;
    const double down = f(x);
    x.data[i] = keep;
    g.data[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a.data[i]), std::abs(b.data[i]), floor});
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]) / den);
  }
  return worst;
}

}  // namespace gx::testing

#include <set>

#include "gx/graph.hpp"

namespace gx::testing {

/// Random graph with edge density `p`, categories drawn uniformly.
inline Graph random_graph(std::mt19937_64& rng, int n_min, int n_max, int node_cats, int edge_cats, double p = 0.3,
                          int num_classes = 1) {
  const int n = std::uniform_int_distribution<int>(n_min, n_max)(rng);
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<int> nc(0, node_cats - 1), ec(0, edge_cats - 1), yc(0, num_classes - 1);
  std::vector<int> labels(n);
  for (auto& l : labels) l = nc(rng);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) edges.push_back({i, j, ec(rng)});
  return make_graph(n, std::move(labels), std::move(edges), yc(rng));
}

}  // namespace gx::testing
