#include "sphkrig/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sphkrig/errors.hpp"
#include "sphkrig/kernels.hpp"
#include "sphkrig/parallel.hpp"

namespace sphkrig {

SymMatrix::SymMatrix(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols())
    throw std::invalid_argument("SymMatrix: matrix is not square");
  const std::size_t n = mat_.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::fabs(mat_(i, j) - mat_(j, i)) > 1e-10)
        throw std::invalid_argument("SymMatrix: entries (" + std::to_string(i) + "," +
                                    std::to_string(j) + ") not symmetric");
      const double avg = 0.5 * (mat_(i, j) + mat_(j, i));
      mat_(i, j) = avg;
      mat_(j, i) = avg;
    }
}

namespace {

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double off_diagonal_frobenius(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

// Applies the Jacobi rotation J(p, q, c, s) as A <- J^T A J, V <- V J.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q, double c, double s) {
  const std::size_t n = a.rows();
  double* rp = a.row(p);
  double* rq = a.row(q);
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = rp[k];
    const double akq = rq[k];
    rp[k] = c * akp - s * akq;
    rq[k] = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomp eig_sym(const SymMatrix& m) {
  const std::size_t n = m.n();
  Matrix a = m.mat();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double norm = frobenius(a);
  const double threshold = 1e-12 * norm;
  const int max_sweeps = 100;

  int sweep = 0;
  if (norm > 0.0) {
    for (; sweep < max_sweeps; ++sweep) {
      if (off_diagonal_frobenius(a) <= threshold) break;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t =
              (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          rotate(a, v, p, q, c, t * c);
        }
      }
    }
    if (sweep == max_sweeps && off_diagonal_frobenius(a) > threshold)
      throw NumericalError("eig_sym: Jacobi did not converge in " + std::to_string(max_sweeps) +
                           " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomp out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    // Largest-magnitude entry made positive (first one on ties).
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mag = std::fabs(v(i, src));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = sign * v(i, src);
  }
  return out;
}

namespace {

// One factorization attempt; returns false on a non-positive or negligible
// pivot (threshold relative to the matrix scale).
bool try_factor(const Matrix& m, double jitter, Matrix& lower) {
  const std::size_t n = m.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
  const double pivot_floor = 1e-14 * std::max(trace / static_cast<double>(n), 1e-300);

  lower = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = lower.row(j);
    const double djj = m(j, j) + jitter - kernels::dot(lj, lj, j);
    if (!(djj > pivot_floor)) return false;
    const double ljj = std::sqrt(djj);
    lower(j, j) = ljj;
    const double inv = 1.0 / ljj;
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(par::max_threads())
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(j) + 1; i < nn; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      lower(ii, j) = (m(ii, j) - kernels::dot(lower.row(ii), lj, j)) * inv;
    }
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const SymMatrix& m, double jitter) {
  if (jitter < 0.0) throw std::invalid_argument("cholesky: negative jitter");
  const std::size_t n = m.n();
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
  const double jitter_cap = 1e-6 * std::max(trace / static_cast<double>(n), 0.0);

  CholeskyFactor out;
  double j = jitter;
  while (true) {
    if (try_factor(m.mat(), j, out.lower)) {
      out.jitter_used = j;
      return out;
    }
    double next = (j > 0.0) ? j * 100.0 : std::max(jitter, 1e-12 * trace / static_cast<double>(n));
    if (next <= j) next = (j > 0.0) ? j * 100.0 : 1e-300;
    if (next > jitter_cap || !(next > 0.0))
      throw NumericalError("cholesky: matrix not positive definite (jitter escalated to " +
                           std::to_string(j) + ")");
    j = next;
  }
}

Vector forward_subst(const Matrix& lower, const Vector& b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw std::invalid_argument("forward_subst: dimension mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - kernels::dot(lower.row(i), y.data(), i)) / lower(i, i);
  return y;
}

Vector backward_subst_t(const Matrix& lower, const Vector& y) {
  const std::size_t n = lower.rows();
  if (y.size() != n) throw std::invalid_argument("backward_subst_t: dimension mismatch");
  Vector x(n);
  for (std::size_t ip = n; ip-- > 0;) {
    double s = y[ip];
    for (std::size_t k = ip + 1; k < n; ++k) s -= lower(k, ip) * x[k];
    x[ip] = s / lower(ip, ip);
  }
  return x;
}

Vector chol_solve(const Matrix& lower, const Vector& b) {
  return backward_subst_t(lower, forward_subst(lower, b));
}

Vector matvec_t(const Matrix& a, const Vector& x) {
  if (a.rows() != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    const double* row = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * row[j];
  }
  return y;
}

Vector lstsq_minnorm(const Matrix& a, const Vector& b, double ridge) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("lstsq: empty system");
  if (a.rows() != b.size()) throw std::invalid_argument("lstsq: row count != rhs length");
  if (ridge < 0.0) throw std::invalid_argument("lstsq: negative ridge");

  const std::size_t p = a.cols();
  SymMatrix gram(kernels::matmul_tn(a, a));
  const Vector rhs = matvec_t(a, b);

  if (ridge > 0.0) return chol_solve(cholesky(gram, ridge).lower, rhs);

  // ridge = 0: plain normal equations when A^T A is cleanly positive
  // definite, otherwise the minimum-norm route.
  Matrix lower;
  if (try_factor(gram.mat(), 0.0, lower)) return chol_solve(lower, rhs);

  if (p <= 600) {
    const EigenDecomp eig = eig_sym(gram);
    const double cutoff = 1e-10 * std::max(eig.values[0], 0.0);
    Vector beta(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
      if (!(eig.values[k] > cutoff)) continue;
      double proj = 0.0;
      for (std::size_t j = 0; j < p; ++j) proj += eig.vectors(j, k) * rhs[j];
      proj /= eig.values[k];
      for (std::size_t j = 0; j < p; ++j) beta[j] += proj * eig.vectors(j, k);
    }
    return beta;
  }

  // Wide rank-deficient systems: vanishing-ridge solve, which damps the
  // null-space components the hard cutoff would drop.
  double trace = 0.0;
  for (std::size_t i = 0; i < p; ++i) trace += gram(i, i);
  return chol_solve(cholesky(gram, 1e-10 * trace / static_cast<double>(p)).lower, rhs);
}

}  // namespace sphkrig
