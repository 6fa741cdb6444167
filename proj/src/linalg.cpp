#include "nma/linalg.hpp"

#include <cmath>

namespace nma {

bool cholesky_solve(Matrix a, std::vector<double> b, std::vector<double>& x,
                    double tol) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  if (max_diag <= 0.0) return false;

  // a -> L with A = L L^T.
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > tol * max_diag)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * x[k];
    x[ii] = s / a(ii, ii);
  }
  return true;
}

std::vector<std::size_t> dependent_columns(const Matrix& x, double tol) {
  const std::size_t n = x.rows(), p = x.cols();
  std::vector<std::vector<double>> basis;
  std::vector<std::size_t> dependent;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> v(n);
    double norm0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = x(i, j);
      norm0 += v[i] * v[i];
    }
    norm0 = std::sqrt(norm0);
    for (const auto& q : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q[i] * v[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += v[i] * v[i];
    norm = std::sqrt(norm);
    if (norm <= tol * std::max(1.0, norm0)) {
      dependent.push_back(j);
    } else {
      for (std::size_t i = 0; i < n; ++i) v[i] /= norm;
      basis.push_back(std::move(v));
    }
  }
  return dependent;
}

}  // namespace nma
