#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gx {

/// Dense row-major matrix of doubles. Batched quantities are stored as
/// vertically stacked blocks (block b occupies rows [b*r, (b+1)*r)).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative shape");
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  [[nodiscard]] const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  [[nodiscard]] bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  [[nodiscard]] std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gx
