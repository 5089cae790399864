#ifndef SPHKRIG_KERNELS_HPP
#define SPHKRIG_KERNELS_HPP

#include "sphkrig/matrix.hpp"

namespace sphkrig::kernels {

// Dense kernels behind basis evaluation, network training, and the linear
// solvers. Each has a serial reference and an OpenMP version that splits
// output rows across threads; a given output element is always accumulated
// serially in the same order, so the two variants agree bit for bit.

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_nt_serial(const Matrix& a, const Matrix& b);

// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_tn_serial(const Matrix& a, const Matrix& b);

// y = A * x
Vector matvec(const Matrix& a, const Vector& x);
Vector matvec_serial(const Matrix& a, const Vector& x);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace sphkrig::kernels

#endif
