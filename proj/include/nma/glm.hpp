#pragma once

// Regression engine used by every estimator: weighted least squares,
// quasi-binomial logistic regression via IRLS (fractional responses with
// prior weights and offsets), the one-parameter no-intercept fluctuation
// solve, L1-penalized logistic regression by coordinate descent, and a
// log-link variant for the fixed-effects arm comparator.
//
// All fits are deterministic: no internal randomness, fixed iteration
// order, so identical inputs give bit-identical results.

#include <optional>
#include <string>
#include <vector>

#include "nma/linalg.hpp"

namespace nma {

struct DesignMatrix {
  std::vector<std::string> names;  // one per column, unique
  Matrix values;                   // rows x names.size()

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

// Column-wise builder; add_column checks length and name uniqueness.
DesignMatrix make_design(std::size_t rows);
void add_column(DesignMatrix& x, const std::string& name,
                const std::vector<double>& column);
void add_intercept(DesignMatrix& x);

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> coef;
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;  // RSS for linear fits
  std::optional<std::string> warning;

  double coefficient(const std::string& name) const;
};

struct FluctuationFit {
  double epsilon = 0.0;
  double score_residual = 0.0;
  int iterations = 0;
};

// Linear predictor cap; past this the logistic mean is numerically 0 or 1
// and small-sample separation would otherwise run away.
constexpr double kEtaCap = 30.0;

double expit(double eta);          // applies the eta cap
double logit(double p);

// Weighted least squares via the normal equations. Throws singular_error
// (naming dependent columns) on rank deficiency and std::domain_error on
// non-positive weights.
FitResult fit_weighted_linear(const DesignMatrix& x, const std::vector<double>& y,
                              const std::vector<double>& w);

struct IrlsOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;  // max-norm of the mean-weight gradient
};

// Quasi-binomial logistic regression: y in [0,1] (fractional allowed),
// prior weights w, fixed offset. Weights are normalized to mean one
// internally; the argmin is unchanged and the gradient tolerance becomes
// scale-free. Separation is capped, not fatal: the result comes back with
// converged=false and a warning.
FitResult fit_logistic(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<double>& w,
                       const std::vector<double>& offset = {},
                       const IrlsOptions& opts = {});

// Same IRLS machinery with a log link, mu = exp(eta) kept below one.
// Used only by the fixed-effects log-link arm regression.
FitResult fit_loglink_binomial(const DesignMatrix& x, const std::vector<double>& y,
                               const std::vector<double>& w,
                               const IrlsOptions& opts = {});

// Weighted Bernoulli quasi-log-likelihood and its gradient at beta,
// exposed for the finite-difference property checks and the lasso.
double logistic_loglik(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<double>& w, const std::vector<double>& offset,
                       const std::vector<double>& beta);
std::vector<double> logistic_gradient(const DesignMatrix& x, const std::vector<double>& y,
                                      const std::vector<double>& w,
                                      const std::vector<double>& offset,
                                      const std::vector<double>& beta);

// Solve for epsilon in logit E(y) = offset + epsilon * h (no intercept),
// i.e. the root of score(e) = sum_i w_i h_i (y_i - expit(offset_i + e h_i)).
// h must be positive so the score is strictly decreasing and the root
// unique. Safeguarded Newton with a bisection fallback; |score| < 1e-9 at
// the returned value. Throws fluctuation_error when no finite solve exists.
FluctuationFit fit_fluctuation(const std::vector<double>& y,
                               const std::vector<double>& offset_logits,
                               const std::vector<double>& clever_covariate,
                               const std::vector<double>& w);

// L1-penalized logistic regression, coordinate descent on the quadratic
// IRLS approximation (columns standardized internally, intercept
// unpenalized). Objective: -(1/n) sum_i loglik_i + lambda * sum_j |beta_std_j|.
// lambda = 0 reduces to fit_logistic.
FitResult fit_lasso_logistic(const DesignMatrix& x, const std::vector<double>& y,
                             double lambda, const IrlsOptions& opts = {});

// Max KKT violation of a lasso solution on the standardized scale:
// 0 when |subgradient| <= lambda at zero slopes and = lambda (signed)
// at active ones.
double lasso_kkt_max_violation(const DesignMatrix& x, const std::vector<double>& y,
                               double lambda, const FitResult& fit);

// 50-point log-spaced lambda grid from lambda_max down to 1e-4*lambda_max.
std::vector<double> lasso_lambda_grid(const DesignMatrix& x, const std::vector<double>& y,
                                      int n_lambda = 50);

// Leave-one-group-out cross-validated deviance over the grid; returns the
// lambda with the smallest mean held-out deviance (largest lambda on ties).
double lasso_cv_lambda(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<int>& groups, int n_lambda = 50);

// eta = X beta (+ offset) and fitted means, shared prediction helpers.
std::vector<double> linear_predictor(const DesignMatrix& x, const std::vector<double>& beta,
                                     const std::vector<double>& offset = {});
double predict_one(const FitResult& fit, const std::vector<std::string>& names,
                   const std::vector<double>& row);

}  // namespace nma
