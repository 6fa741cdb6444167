#pragma once

// Minimal dense linear algebra for the regression problems in this library.
// Everything here is a few dozen rows by a handful of columns, so plain
// loops and an unpivoted Cholesky are all that is needed.

#include <cstddef>
#include <string>
#include <vector>

namespace nma {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// Solve A x = b for symmetric positive definite A in place; returns false if
// a pivot falls below tol * max diagonal (rank deficiency).
bool cholesky_solve(Matrix a, std::vector<double> b, std::vector<double>& x,
                    double tol = 1e-12);

// Indices of columns that are (numerically) linear combinations of earlier
// ones, via modified Gram-Schmidt. Used to name offenders in error messages.
std::vector<std::size_t> dependent_columns(const Matrix& x, double tol = 1e-10);

}  // namespace nma
