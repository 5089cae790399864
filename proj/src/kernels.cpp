#include "sphkrig/kernels.hpp"

#include <stdexcept>

#include "sphkrig/parallel.hpp"

namespace sphkrig::kernels {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// One output row of C = A * B: c_i += a_ik * b_k, j innermost so the
// compiler vectorizes the row accumulation.
inline void row_nn(const double* a_row, const Matrix& b, double* c_row) {
  const std::size_t k = b.rows(), n = b.cols();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double aik = a_row[kk];
    const double* b_row = b.row(kk);
    for (std::size_t j = 0; j < n; ++j) c_row[j] += aik * b_row[j];
  }
}

// One output row of C = A * B^T: plain dot products of rows.
inline void row_nt(const double* a_row, const Matrix& b, double* c_row) {
  const std::size_t n = b.rows(), k = b.cols();
  for (std::size_t j = 0; j < n; ++j) c_row[j] = dot(a_row, b.row(j), k);
}

// One output row of C = A^T * B (row i of C gathers column i of A).
inline void row_tn(const Matrix& a, const Matrix& b, std::size_t i, double* c_row) {
  const std::size_t k = a.rows(), n = b.cols();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double aki = a(kk, i);
    const double* b_row = b.row(kk);
    for (std::size_t j = 0; j < n; ++j) c_row[j] += aki * b_row[j];
  }
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  // Four independent accumulators; folded in a fixed order.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + s2) + s3;
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) row_nn(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < m; ++i) row_nn(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul_nt_serial(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) row_nt(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < m; ++i) row_nt(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul_tn_serial(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) row_tn(a, b, i, c.row(i));
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < m; ++i) row_tn(a, b, static_cast<std::size_t>(i), c.row(i));
  return c;
}

Vector matvec_serial(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x.data(), x.size());
  return y;
}

Vector matvec(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vector y(a.rows());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
  for (std::ptrdiff_t i = 0; i < m; ++i) y[i] = dot(a.row(i), x.data(), x.size());
  return y;
}

}  // namespace sphkrig::kernels
