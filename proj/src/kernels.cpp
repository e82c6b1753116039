#include "gx/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gx::kernels {

namespace {

// One output row of a block product; shared by both variants so the
// accumulation order is identical.
inline void bmm_row(int k, int c, const double* a_row, const double* b_blk, double* out_row) {
  std::fill(out_row, out_row + c, 0.0);
  for (int p = 0; p < k; ++p) {
    const double av = a_row[p];
    if (av == 0.0) continue;
    const double* b_row = b_blk + static_cast<std::size_t>(p) * c;
    for (int j = 0; j < c; ++j) out_row[j] += av * b_row[j];
  }
}

inline void softmax_row(int cols, const double* in, double* out) {
  double mx = in[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
  double s = 0.0;
  for (int j = 0; j < cols; ++j) {
    out[j] = std::exp(in[j] - mx);
    s += out[j];
  }
  const double inv = 1.0 / s;
  for (int j = 0; j < cols; ++j) out[j] *= inv;
}

inline void log_softmax_row(int cols, const double* in, double* out) {
  double mx = in[0];
  for (int j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
  double s = 0.0;
  for (int j = 0; j < cols; ++j) s += std::exp(in[j] - mx);
  const double lse = mx + std::log(s);
  for (int j = 0; j < cols; ++j) out[j] = in[j] - lse;
}

inline double csr_row(int i, const CsrView& m, const double* in) {
  double acc = 0.0;
  for (int q = m.row_ptr[i]; q < m.row_ptr[i + 1]; ++q) acc += m.weights[q] * in[m.col_idx[q]];
  return acc;
}

inline double sigmoid1(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

namespace serial {

void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs) {
  for (int blk = 0; blk < nb; ++blk) {
    const double* b_blk = shared_rhs ? b : b + static_cast<std::size_t>(blk) * k * c;
    for (int i = 0; i < r; ++i) {
      const std::size_t row = static_cast<std::size_t>(blk) * r + i;
      bmm_row(k, c, a + row * k, b_blk, out + row * c);
    }
  }
}

void block_transpose(int nb, int r, int c, const double* a, double* out) {
  for (int blk = 0; blk < nb; ++blk) {
    const double* src = a + static_cast<std::size_t>(blk) * r * c;
    double* dst = out + static_cast<std::size_t>(blk) * r * c;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) dst[static_cast<std::size_t>(j) * r + i] = src[static_cast<std::size_t>(i) * c + j];
  }
}

void softmax_rows(int rows, int cols, const double* a, double* out) {
  for (int i = 0; i < rows; ++i)
    softmax_row(cols, a + static_cast<std::size_t>(i) * cols, out + static_cast<std::size_t>(i) * cols);
}

void log_softmax_rows(int rows, int cols, const double* a, double* out) {
  for (int i = 0; i < rows; ++i)
    log_softmax_row(cols, a + static_cast<std::size_t>(i) * cols, out + static_cast<std::size_t>(i) * cols);
}

void tanh(std::size_t n, const double* a, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(a[i]);
}

void sigmoid(std::size_t n, const double* a, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid1(a[i]);
}

void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void hadamard(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void csr_apply(int out_size, const CsrView& map, const double* in, double* out) {
  for (int i = 0; i < out_size; ++i) out[i] = csr_row(i, map, in);
}

}  // namespace serial

namespace parallel {

void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs) {
  const long total = static_cast<long>(nb) * r;
#pragma omp parallel for schedule(static)
  for (long row = 0; row < total; ++row) {
    const long blk = row / r;
    const double* b_blk = shared_rhs ? b : b + static_cast<std::size_t>(blk) * k * c;
    bmm_row(k, c, a + static_cast<std::size_t>(row) * k, b_blk, out + static_cast<std::size_t>(row) * c);
  }
}

void block_transpose(int nb, int r, int c, const double* a, double* out) {
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nb; ++blk) {
    const double* src = a + static_cast<std::size_t>(blk) * r * c;
    double* dst = out + static_cast<std::size_t>(blk) * r * c;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) dst[static_cast<std::size_t>(j) * r + i] = src[static_cast<std::size_t>(i) * c + j];
  }
}

void softmax_rows(int rows, int cols, const double* a, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i)
    softmax_row(cols, a + static_cast<std::size_t>(i) * cols, out + static_cast<std::size_t>(i) * cols);
}

void log_softmax_rows(int rows, int cols, const double* a, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i)
    log_softmax_row(cols, a + static_cast<std::size_t>(i) * cols, out + static_cast<std::size_t>(i) * cols);
}

void tanh(std::size_t n, const double* a, double* out) {
  const long len = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < len; ++i) out[i] = std::tanh(a[i]);
}

void sigmoid(std::size_t n, const double* a, double* out) {
  const long len = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < len; ++i) out[i] = sigmoid1(a[i]);
}

void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out) {
  const long len = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < len; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void hadamard(std::size_t n, const double* x, const double* y, double* out) {
  const long len = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < len; ++i) out[i] = x[i] * y[i];
}

void csr_apply(int out_size, const CsrView& map, const double* in, double* out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < out_size; ++i) out[i] = csr_row(i, map, in);
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
bool go_parallel(std::size_t work) {
#ifdef _OPENMP
  return work >= kParallelThreshold && max_threads() > 1 && !omp_in_parallel();
#else
  (void)work;
  return false;
#endif
}
}  // namespace

void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs) {
  const std::size_t work = static_cast<std::size_t>(nb) * r * k * c;
  if (go_parallel(work))
    parallel::bmm(nb, r, k, c, a, b, out, shared_rhs);
  else
    serial::bmm(nb, r, k, c, a, b, out, shared_rhs);
}

void block_transpose(int nb, int r, int c, const double* a, double* out) {
  if (go_parallel(static_cast<std::size_t>(nb) * r * c))
    parallel::block_transpose(nb, r, c, a, out);
  else
    serial::block_transpose(nb, r, c, a, out);
}

void softmax_rows(int rows, int cols, const double* a, double* out) {
  if (go_parallel(static_cast<std::size_t>(rows) * cols * 8))
    parallel::softmax_rows(rows, cols, a, out);
  else
    serial::softmax_rows(rows, cols, a, out);
}

void log_softmax_rows(int rows, int cols, const double* a, double* out) {
  if (go_parallel(static_cast<std::size_t>(rows) * cols * 8))
    parallel::log_softmax_rows(rows, cols, a, out);
  else
    serial::log_softmax_rows(rows, cols, a, out);
}

void tanh(std::size_t n, const double* a, double* out) {
  if (go_parallel(n * 8))
    parallel::tanh(n, a, out);
  else
    serial::tanh(n, a, out);
}

void sigmoid(std::size_t n, const double* a, double* out) {
  if (go_parallel(n * 8))
    parallel::sigmoid(n, a, out);
  else
    serial::sigmoid(n, a, out);
}

void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out) {
  if (go_parallel(n))
    parallel::axpby(n, alpha, x, beta, y, out);
  else
    serial::axpby(n, alpha, x, beta, y, out);
}

void hadamard(std::size_t n, const double* x, const double* y, double* out) {
  if (go_parallel(n))
    parallel::hadamard(n, x, y, out);
  else
    serial::hadamard(n, x, y, out);
}

void csr_apply(int out_size, const CsrView& map, const double* in, double* out) {
  if (go_parallel(map.weights.size()))
    parallel::csr_apply(out_size, map, in, out);
  else
    serial::csr_apply(out_size, map, in, out);
}

}  // namespace gx::kernels
