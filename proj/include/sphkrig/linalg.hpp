#ifndef SPHKRIG_LINALG_HPP
#define SPHKRIG_LINALG_HPP

#include "sphkrig/matrix.hpp"

namespace sphkrig {

// Symmetric matrix; construction checks |a_ij - a_ji| <= 1e-10 and then
// symmetrizes exactly so downstream code never sees drift.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix m);

  std::size_t n() const { return mat_.rows(); }
  const Matrix& mat() const { return mat_; }
  double operator()(std::size_t i, std::size_t j) const { return mat_(i, j); }

 private:
  Matrix mat_;
};

// Eigenvalues sorted non-increasing; vectors has orthonormal eigenvector
// columns in matching order. Each column's largest-magnitude entry is made
// positive so decompositions are reproducible.
struct EigenDecomp {
  Vector values;
  Matrix vectors;
};

// Cyclic Jacobi rotations. Sweeps until the off-diagonal Frobenius norm
// drops below 1e-12 * ||m||_F, capped at 100 sweeps (NumericalError beyond).
EigenDecomp eig_sym(const SymMatrix& m);

struct CholeskyFactor {
  Matrix lower;
  double jitter_used = 0.0;
};

// L L^T = m + jitter_used * I. Starts from the requested jitter and
// escalates by decades up to 1e-6 * trace/n before giving up with a
// NumericalError.
CholeskyFactor cholesky(const SymMatrix& m, double jitter);

// Solves L L^T x = b for a lower-triangular factor.
Vector chol_solve(const Matrix& lower, const Vector& b);
Vector forward_subst(const Matrix& lower, const Vector& b);
Vector backward_subst_t(const Matrix& lower, const Vector& y);

// argmin ||A beta - b||^2 + ridge ||beta||^2. With ridge = 0 and a
// rank-deficient A, returns the minimum-norm solution: exactly via the
// eigendecomposition of A^T A (relative cutoff 1e-10) for p <= 600, and via
// a vanishing-ridge Cholesky solve for wider problems where a dense Jacobi
// eigendecomposition is too expensive.
Vector lstsq_minnorm(const Matrix& a, const Vector& b, double ridge);

// y = A^T x, accumulated serially (used for normal equations).
Vector matvec_t(const Matrix& a, const Vector& x);

}  // namespace sphkrig

#endif
