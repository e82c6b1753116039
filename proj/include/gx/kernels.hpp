#pragma once

// Dense numeric kernels used by the autodiff layer.
//
// Every kernel exists twice: `serial::` is the plain reference loop kept for
// testing, `parallel::` is the OpenMP version. Both evaluate each output
// element with the same inner-loop order, so results agree bit for bit.
// The unqualified entry points dispatch on problem size.

#include <cstddef>
#include <span>

namespace gx::kernels {

/// Sparse linear map stored in CSR form over flattened indices.
struct CsrView {
  std::span<const int> row_ptr;
  std::span<const int> col_idx;
  std::span<const double> weights;
};

namespace serial {

/// out[b] = a[b] * b_mat[b] for nb blocks; a blocks are r x k, b blocks k x c.
/// When `shared_rhs` is set, the single k x c right operand is reused by every block.
void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs);
void block_transpose(int nb, int r, int c, const double* a, double* out);
void softmax_rows(int rows, int cols, const double* a, double* out);
void log_softmax_rows(int rows, int cols, const double* a, double* out);
void tanh(std::size_t n, const double* a, double* out);
void sigmoid(std::size_t n, const double* a, double* out);
void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out);
void hadamard(std::size_t n, const double* x, const double* y, double* out);
void csr_apply(int out_size, const CsrView& map, const double* in, double* out);

}  // namespace serial

namespace parallel {

void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs);
void block_transpose(int nb, int r, int c, const double* a, double* out);
void softmax_rows(int rows, int cols, const double* a, double* out);
void log_softmax_rows(int rows, int cols, const double* a, double* out);
void tanh(std::size_t n, const double* a, double* out);
void sigmoid(std::size_t n, const double* a, double* out);
void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out);
void hadamard(std::size_t n, const double* x, const double* y, double* out);
void csr_apply(int out_size, const CsrView& map, const double* in, double* out);

}  // namespace parallel

/// Work (in multiply-adds) above which the dispatching entry points go parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

int max_threads();

void bmm(int nb, int r, int k, int c, const double* a, const double* b, double* out, bool shared_rhs);
void block_transpose(int nb, int r, int c, const double* a, double* out);
void softmax_rows(int rows, int cols, const double* a, double* out);
void log_softmax_rows(int rows, int cols, const double* a, double* out);
void tanh(std::size_t n, const double* a, double* out);
void sigmoid(std::size_t n, const double* a, double* out);
void axpby(std::size_t n, double alpha, const double* x, double beta, const double* y, double* out);
void hadamard(std::size_t n, const double* x, const double* y, double* out);
void csr_apply(int out_size, const CsrView& map, const double* in, double* out);

}  // namespace gx::kernels
