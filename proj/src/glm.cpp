#include "nma/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "nma/errors.hpp"

namespace nma {

namespace {

void check_dims(const DesignMatrix& x, const std::vector<double>& y,
                const std::vector<double>& w, const std::vector<double>& offset) {
  if (x.rows() != y.size() || x.rows() != w.size())
    throw std::invalid_argument("design/response/weight length mismatch");
  if (!offset.empty() && offset.size() != y.size())
    throw std::invalid_argument("offset length mismatch");
  for (double wi : w)
    if (!(wi > 0.0) || !std::isfinite(wi))
      throw std::domain_error("weights must be positive and finite");
}

void check_response01(const std::vector<double>& y) {
  for (double yi : y)
    if (!(yi >= 0.0 && yi <= 1.0))
      throw std::domain_error("logistic response must lie in [0,1]");
}

double binomial_deviance(const std::vector<double>& y, const std::vector<double>& mu,
                         const std::vector<double>& w) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = 0.0;
    if (y[i] > 0.0) d += y[i] * std::log(y[i] / mu[i]);
    if (y[i] < 1.0) d += (1.0 - y[i]) * std::log((1.0 - y[i]) / (1.0 - mu[i]));
    dev += 2.0 * w[i] * d;
  }
  return dev;
}

std::vector<double> normalized(const std::vector<double>& w) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] / mean;
  return out;
}

[[noreturn]] void throw_singular(const DesignMatrix& x) {
  const auto dep = dependent_columns(x.values);
  std::ostringstream msg;
  msg << "design matrix is rank deficient; dependent column(s):";
  if (dep.empty()) {
    msg << " (none identified)";
  } else {
    for (auto j : dep) msg << ' ' << x.names[j];
  }
  throw singular_error(msg.str());
}

}  // namespace

DesignMatrix make_design(std::size_t rows) {
  DesignMatrix x;
  x.values = Matrix(rows, 0);
  return x;
}

void add_column(DesignMatrix& x, const std::string& name,
                const std::vector<double>& column) {
  const std::size_t rows = x.names.empty() ? column.size() : x.rows();
  if (column.size() != rows)
    throw std::invalid_argument("column '" + name + "' has wrong length");
  for (const auto& existing : x.names)
    if (existing == name)
      throw std::invalid_argument("duplicate column name '" + name + "'");
  for (double v : column)
    if (!std::isfinite(v))
      throw std::domain_error("non-finite value in column '" + name + "'");
  Matrix next(rows, x.cols() + 1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) next(i, j) = x.values(i, j);
    next(i, x.cols()) = column[i];
  }
  x.values = std::move(next);
  x.names.push_back(name);
}

void add_intercept(DesignMatrix& x) {
  add_column(x, "(Intercept)", std::vector<double>(x.rows(), 1.0));
}

double FitResult::coefficient(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return coef[j];
  throw std::invalid_argument("no coefficient named '" + name + "'");
}

double expit(double eta) {
  eta = std::clamp(eta, -kEtaCap, kEtaCap);
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("logit: argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

std::vector<double> linear_predictor(const DesignMatrix& x, const std::vector<double>& beta,
                                     const std::vector<double>& offset) {
  std::vector<double> eta(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = offset.empty() ? 0.0 : offset[i];
    for (std::size_t j = 0; j < x.cols(); ++j) s += x.values(i, j) * beta[j];
    eta[i] = s;
  }
  return eta;
}

double predict_one(const FitResult& fit, const std::vector<std::string>& names,
                   const std::vector<double>& row) {
  if (names.size() != fit.names.size() || row.size() != fit.coef.size())
    throw std::invalid_argument("prediction row does not match fit");
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += fit.coef[j] * row[j];
  return s;
}

FitResult fit_weighted_linear(const DesignMatrix& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
  check_dims(x, y, w, {});
  if (x.rows() < x.cols())
    throw std::invalid_argument("fewer rows than columns in weighted least squares");
  const std::size_t p = x.cols();
  Matrix xtwx(p, p);
  std::vector<double> xtwy(p, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double wx = w[i] * x.values(i, j);
      xtwy[j] += wx * y[i];
      for (std::size_t k = j; k < p; ++k) xtwx(j, k) += wx * x.values(i, k);
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) xtwx(j, k) = xtwx(k, j);

  FitResult fit;
  fit.names = x.names;
  if (!cholesky_solve(xtwx, xtwy, fit.coef)) throw_singular(x);
  fit.converged = true;
  fit.iterations = 1;
  double rss = 0.0;
  const auto eta = linear_predictor(x, fit.coef);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - eta[i];
    rss += w[i] * r * r;
  }
  fit.deviance = rss;
  return fit;
}

double logistic_loglik(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<double>& w, const std::vector<double>& offset,
                       const std::vector<double>& beta) {
  const auto eta = linear_predictor(x, beta, offset);
  double ll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double mu = expit(eta[i]);
    ll += w[i] * (y[i] * std::log(mu) + (1.0 - y[i]) * std::log(1.0 - mu));
  }
  return ll;
}

std::vector<double> logistic_gradient(const DesignMatrix& x, const std::vector<double>& y,
                                      const std::vector<double>& w,
                                      const std::vector<double>& offset,
                                      const std::vector<double>& beta) {
  const auto eta = linear_predictor(x, beta, offset);
  std::vector<double> g(x.cols(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = w[i] * (y[i] - expit(eta[i]));
    for (std::size_t j = 0; j < x.cols(); ++j) g[j] += r * x.values(i, j);
  }
  return g;
}

FitResult fit_logistic(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<double>& w, const std::vector<double>& offset,
                       const IrlsOptions& opts) {
  check_dims(x, y, w, offset);
  check_response01(y);
  const std::size_t n = x.rows(), p = x.cols();
  const auto wn = normalized(w);
  const std::vector<double> off = offset.empty() ? std::vector<double>(n, 0.0) : offset;

  FitResult fit;
  fit.names = x.names;
  fit.coef.assign(p, 0.0);

  std::vector<double> mu(n), eta(n);
  auto refresh = [&](const std::vector<double>& beta) {
    eta = linear_predictor(x, beta, off);
    for (std::size_t i = 0; i < n; ++i) mu[i] = expit(eta[i]);
  };
  refresh(fit.coef);
  double dev = binomial_deviance(y, mu, wn);

  bool grad_ok = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    double gmax = 0.0;
    {
      const auto g = logistic_gradient(x, y, wn, off, fit.coef);
      for (double gj : g) gmax = std::max(gmax, std::fabs(gj));
    }
    if (gmax < opts.grad_tol) {
      grad_ok = true;
      break;
    }
    // One IRLS step: weighted least squares on the working response.
    Matrix xtwx(p, p);
    std::vector<double> xtwz(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
      const double omega = wn[i] * v;
      const double z = (eta[i] - off[i]) + (y[i] - mu[i]) / v;
      for (std::size_t j = 0; j < p; ++j) {
        const double wx = omega * x.values(i, j);
        xtwz[j] += wx * z;
        for (std::size_t k = j; k < p; ++k) xtwx(j, k) += wx * x.values(i, k);
      }
    }
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < j; ++k) xtwx(j, k) = xtwx(k, j);
    std::vector<double> beta_new;
    if (!cholesky_solve(xtwx, xtwz, beta_new)) {
      // Working weights may have collapsed under separation; a whisper of
      // ridge keeps the step defined. Structural collinearity still throws.
      double max_diag = 0.0;
      for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, xtwx(j, j));
      Matrix ridged = xtwx;
      for (std::size_t j = 0; j < p; ++j) ridged(j, j) += 1e-8 * std::max(max_diag, 1.0);
      if (!dependent_columns(x.values).empty() ||
          !cholesky_solve(ridged, xtwz, beta_new))
        throw_singular(x);
    }
    // Step-halving if the quasi-deviance got worse.
    const std::vector<double> beta_old = fit.coef;
    fit.coef = beta_new;
    refresh(fit.coef);
    double dev_new = binomial_deviance(y, mu, wn);
    for (int half = 0; half < 30 && dev_new > dev + 1e-12 * (1.0 + std::fabs(dev));
         ++half) {
      for (std::size_t j = 0; j < p; ++j)
        fit.coef[j] = 0.5 * (fit.coef[j] + beta_old[j]);
      refresh(fit.coef);
      dev_new = binomial_deviance(y, mu, wn);
    }
    dev = dev_new;
  }

  refresh(fit.coef);
  bool separated = false;
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(eta[i]) >= kEtaCap) separated = true;

  fit.iterations = iter;
  fit.deviance = binomial_deviance(y, mu, wn);
  fit.converged = grad_ok && !separated;
  if (separated) fit.warning = "separation: linear predictor capped at +/-30";
  else if (!grad_ok) fit.warning = "IRLS iteration limit reached";
  return fit;
}

FitResult fit_loglink_binomial(const DesignMatrix& x, const std::vector<double>& y,
                               const std::vector<double>& w, const IrlsOptions& opts) {
  check_dims(x, y, w, {});
  check_response01(y);
  const std::size_t n = x.rows(), p = x.cols();
  const auto wn = normalized(w);

  FitResult fit;
  fit.names = x.names;
  fit.coef.assign(p, 0.0);
  // Start from mu = mean(y) via the intercept when present.
  double ybar = 0.0, wtot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar += wn[i] * y[i];
    wtot += wn[i];
  }
  ybar = std::clamp(ybar / wtot, 1e-6, 1.0 - 1e-6);
  for (std::size_t j = 0; j < p; ++j)
    if (x.names[j] == "(Intercept)") fit.coef[j] = std::log(ybar);

  const double eta_hi = -1e-8;  // keep mu strictly below one
  std::vector<double> eta(n), mu(n);
  auto refresh = [&]() {
    eta = linear_predictor(x, fit.coef);
    for (std::size_t i = 0; i < n; ++i)
      mu[i] = std::exp(std::clamp(eta[i], -kEtaCap, eta_hi));
  };
  refresh();
  double dev = binomial_deviance(y, mu, wn);

  bool grad_ok = false;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = wn[i] * (y[i] - mu[i]) / std::max(1.0 - mu[i], 1e-10);
      for (std::size_t j = 0; j < p; ++j) g[j] += r * x.values(i, j);
    }
    double gmax = 0.0;
    for (double gj : g) gmax = std::max(gmax, std::fabs(gj));
    if (gmax < opts.grad_tol) {
      grad_ok = true;
      break;
    }
    Matrix xtwx(p, p);
    std::vector<double> xtwz(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double omega = wn[i] * mu[i] / std::max(1.0 - mu[i], 1e-10);
      const double z = std::clamp(eta[i], -kEtaCap, eta_hi) + (y[i] - mu[i]) / mu[i];
      for (std::size_t j = 0; j < p; ++j) {
        const double wx = omega * x.values(i, j);
        xtwz[j] += wx * z;
        for (std::size_t k = j; k < p; ++k) xtwx(j, k) += wx * x.values(i, k);
      }
    }
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < j; ++k) xtwx(j, k) = xtwx(k, j);
    std::vector<double> beta_new;
    if (!cholesky_solve(xtwx, xtwz, beta_new)) throw_singular(x);
    const std::vector<double> beta_old = fit.coef;
    fit.coef = beta_new;
    refresh();
    double dev_new = binomial_deviance(y, mu, wn);
    for (int half = 0; half < 30 && dev_new > dev + 1e-12 * (1.0 + std::fabs(dev));
         ++half) {
      for (std::size_t j = 0; j < p; ++j)
        fit.coef[j] = 0.5 * (fit.coef[j] + beta_old[j]);
      refresh();
      dev_new = binomial_deviance(y, mu, wn);
    }
    dev = dev_new;
  }
  refresh();
  bool capped = false;
  for (std::size_t i = 0; i < n; ++i)
    if (eta[i] >= eta_hi || eta[i] <= -kEtaCap) capped = true;
  fit.iterations = iter;
  fit.deviance = binomial_deviance(y, mu, wn);
  fit.converged = grad_ok && !capped;
  if (capped) fit.warning = "log-link mean capped";
  else if (!grad_ok) fit.warning = "IRLS iteration limit reached";
  return fit;
}

FluctuationFit fit_fluctuation(const std::vector<double>& y,
                               const std::vector<double>& offset_logits,
                               const std::vector<double>& clever_covariate,
                               const std::vector<double>& w) {
  const std::size_t n = y.size();
  if (offset_logits.size() != n || clever_covariate.size() != n || w.size() != n)
    throw std::invalid_argument("fluctuation input length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0 && y[i] < 1.0))
      throw fluctuation_error("fluctuation response must lie strictly in (0,1)");
    if (!std::isfinite(offset_logits[i]) || !std::isfinite(clever_covariate[i]) ||
        !(clever_covariate[i] > 0.0) || !(w[i] > 0.0))
      throw fluctuation_error("fluctuation offsets/covariates must be finite and positive");
  }

  auto score = [&](double eps) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += w[i] * clever_covariate[i] *
           (y[i] - expit(offset_logits[i] + eps * clever_covariate[i]));
    return s;
  };
  auto dscore = [&](double eps) {
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = expit(offset_logits[i] + eps * clever_covariate[i]);
      const double h = clever_covariate[i];
      d -= w[i] * h * h * mu * (1.0 - mu);
    }
    return d;
  };

  constexpr double tol = 1e-9;
  FluctuationFit out;
  double s0 = score(0.0);
  if (!std::isfinite(s0)) throw fluctuation_error("fluctuation score not finite at 0");
  if (std::fabs(s0) < tol) return out;  // epsilon = 0 exactly

  // Bracket the root; the score is strictly decreasing in epsilon.
  double lo = -1.0, hi = 1.0;
  for (int k = 0; k < 200 && score(lo) <= 0.0; ++k) lo *= 2.0;
  for (int k = 0; k < 200 && score(hi) >= 0.0; ++k) hi *= 2.0;
  if (!(score(lo) > 0.0 && score(hi) < 0.0))
    throw fluctuation_error("fluctuation root could not be bracketed");

  double eps = 0.0, s = s0;
  for (int iter = 1; iter <= 200; ++iter) {
    out.iterations = iter;
    const double d = dscore(eps);
    double next = (d < 0.0) ? eps - s / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    eps = next;
    s = score(eps);
    if (!std::isfinite(s))
      throw fluctuation_error("fluctuation score became non-finite");
    if (std::fabs(s) < tol) {
      out.epsilon = eps;
      out.score_residual = s;
      return out;
    }
    (s > 0.0 ? lo : hi) = eps;
    if (hi - lo < 1e-15 * std::max(1.0, std::fabs(eps))) break;
  }
  std::ostringstream msg;
  msg << "fluctuation did not converge: epsilon=" << eps << " score=" << s
      << " n=" << n;
  throw fluctuation_error(msg.str());
}

// ---------------------------------------------------------------------------
// Lasso logistic regression.

namespace {

struct StdDesign {
  Matrix xs;                  // standardized columns (intercept left as 1)
  std::vector<double> mean;   // per column (0 for intercept)
  std::vector<double> scale;  // per column (1 for intercept / constant)
  std::vector<bool> penalized;
  std::ptrdiff_t intercept = -1;  // first constant column, if any
};

StdDesign standardize(const DesignMatrix& x) {
  const std::size_t n = x.rows(), p = x.cols();
  StdDesign sd;
  sd.xs = x.values;
  sd.mean.assign(p, 0.0);
  sd.scale.assign(p, 1.0);
  sd.penalized.assign(p, true);
  for (std::size_t j = 0; j < p; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x.values(i, j);
    m /= n;
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x.values(i, j) - m;
      v += d * d;
    }
    const double s = std::sqrt(v / n);
    if (s == 0.0) {
      // Constant column: the first is the unpenalized intercept, any other
      // stays frozen at zero.
      if (sd.intercept < 0 && x.values(0, j) != 0.0) sd.intercept = j;
      sd.penalized[j] = false;
      continue;
    }
    sd.mean[j] = m;
    sd.scale[j] = s;
    for (std::size_t i = 0; i < n; ++i) sd.xs(i, j) = (x.values(i, j) - m) / s;
  }
  if (sd.intercept >= 0) {
    for (std::size_t i = 0; i < n; ++i) sd.xs(i, sd.intercept) = 1.0;
    sd.mean[sd.intercept] = 0.0;
    sd.scale[sd.intercept] = 1.0;
  }
  return sd;
}

// Coordinate descent for the standardized problem at a single lambda,
// warm-started from beta. Each quadratic approximation is solved with
// active-set sweeps: one full pass to pick up entering coordinates, then
// passes over the active set only. Returns iterations used (0 => cap hit).
int cd_solve(const StdDesign& sd, const std::vector<double>& y, double lambda,
             std::vector<double>& beta, int max_outer, double tol = 1e-9) {
  const std::size_t n = sd.xs.rows(), p = sd.xs.cols();
  std::vector<double> eta(n), mu(n), v(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += sd.xs(i, j) * beta[j];
    eta[i] = s;
    mu[i] = expit(s);
  }
  auto soft = [](double val, double t) {
    if (val > t) return val - t;
    if (val < -t) return val + t;
    return 0.0;
  };
  std::vector<std::size_t> coords;
  coords.reserve(p);
  for (std::size_t j = 0; j < p; ++j)
    if (sd.penalized[j] || static_cast<std::ptrdiff_t>(j) == sd.intercept)
      coords.push_back(j);

  // Within one quadratic approximation v is fixed, so the per-coordinate
  // curvature is precomputed and the working residual r = z - eta is
  // maintained incrementally.
  std::vector<double> r(n), denom(p);
  auto sweep_over = [&](const std::vector<std::size_t>& js) {
    double max_change = 0.0;
    for (std::size_t j : js) {
      if (denom[j] <= 0.0) continue;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += v[i] * sd.xs(i, j) * r[i];
      rho = rho / n + denom[j] * beta[j];
      const double bj_new = sd.penalized[j] ? soft(rho, lambda) / denom[j]
                                            : rho / denom[j];
      const double delta = bj_new - beta[j];
      if (delta != 0.0) {
        beta[j] = bj_new;
        for (std::size_t i = 0; i < n; ++i) r[i] -= sd.xs(i, j) * delta;
        max_change = std::max(max_change, std::fabs(delta));
      }
    }
    return max_change;
  };

  // Penalized objective, tracked to stop early when a quasi-separated fit
  // creeps toward the linear-predictor cap without meaningful progress.
  auto objective = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = expit(eta[i]);
      ll += y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m);
    }
    double pen = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      if (sd.penalized[j]) pen += std::fabs(beta[j]);
    return -ll / static_cast<double>(n) + lambda * pen;
  };
  double obj_prev = objective();
  std::vector<std::size_t> active;
  for (int outer = 1; outer <= max_outer; ++outer) {
    // Quadratic approximation at the current beta.
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
      z[i] = eta[i] + (y[i] - mu[i]) / v[i];
      r[i] = z[i] - eta[i];
    }
    for (std::size_t j = 0; j < p; ++j) {
      double dj = 0.0;
      for (std::size_t i = 0; i < n; ++i) dj += v[i] * sd.xs(i, j) * sd.xs(i, j);
      denom[j] = dj / n;
    }
    double max_change_outer = 0.0;
    for (int cycle = 0; cycle < 50; ++cycle) {
      double full_change = sweep_over(coords);
      max_change_outer = std::max(max_change_outer, full_change);
      if (full_change < tol) break;
      active.clear();
      for (std::size_t j : coords)
        if (beta[j] != 0.0 || static_cast<std::ptrdiff_t>(j) == sd.intercept)
          active.push_back(j);
      for (int s = 0; s < 300; ++s)
        if (sweep_over(active) < tol) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      eta[i] = z[i] - r[i];
      mu[i] = expit(eta[i]);
    }
    if (max_change_outer < tol) return outer;
    const double obj = objective();
    if (obj_prev - obj <= 1e-10 * (1.0 + std::fabs(obj_prev))) return outer;
    obj_prev = obj;
  }
  return 0;
}

FitResult destandardize(const DesignMatrix& x, const StdDesign& sd,
                        const std::vector<double>& beta_std, bool converged,
                        int iterations, const std::vector<double>& y) {
  FitResult fit;
  fit.names = x.names;
  fit.coef.assign(x.cols(), 0.0);
  double shift = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == sd.intercept) continue;
    fit.coef[j] = beta_std[j] / sd.scale[j];
    shift += beta_std[j] * sd.mean[j] / sd.scale[j];
  }
  if (sd.intercept >= 0) fit.coef[sd.intercept] = beta_std[sd.intercept] - shift;
  fit.converged = converged;
  fit.iterations = iterations;
  const auto eta = linear_predictor(x, fit.coef);
  std::vector<double> mu(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) mu[i] = expit(eta[i]);
  fit.deviance = binomial_deviance(y, mu, std::vector<double>(y.size(), 1.0));
  return fit;
}

std::vector<double> to_standardized(const StdDesign& sd, const FitResult& fit) {
  std::vector<double> beta_std(fit.coef.size(), 0.0);
  double shift = 0.0;
  for (std::size_t j = 0; j < fit.coef.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == sd.intercept) continue;
    beta_std[j] = fit.coef[j] * sd.scale[j];
    shift += fit.coef[j] * sd.mean[j];
  }
  if (sd.intercept >= 0) beta_std[sd.intercept] = fit.coef[sd.intercept] + shift;
  return beta_std;
}

}  // namespace

FitResult fit_lasso_logistic(const DesignMatrix& x, const std::vector<double>& y,
                             double lambda, const IrlsOptions& opts) {
  check_dims(x, y, std::vector<double>(y.size(), 1.0), {});
  check_response01(y);
  if (lambda < 0.0) throw std::domain_error("lambda must be >= 0");
  const auto sd = standardize(x);
  std::vector<double> beta(x.cols(), 0.0);
  const int used = cd_solve(sd, y, lambda, beta, opts.max_iter > 0 ? opts.max_iter : 100);
  auto fit = destandardize(x, sd, beta, used > 0, used, y);
  const auto eta = linear_predictor(x, fit.coef);
  for (double e : eta)
    if (std::fabs(e) >= kEtaCap) {
      fit.converged = false;
      fit.warning = "separation: linear predictor capped at +/-30";
    }
  return fit;
}

double lasso_kkt_max_violation(const DesignMatrix& x, const std::vector<double>& y,
                               double lambda, const FitResult& fit) {
  const auto sd = standardize(x);
  const auto beta_std = to_standardized(sd, fit);
  const std::size_t n = x.rows(), p = x.cols();
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += sd.xs(i, j) * beta_std[j];
    eta[i] = s;
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (!sd.penalized[j]) continue;
    double g = 0.0;  // gradient of -(1/n) loglik w.r.t. standardized beta_j
    for (std::size_t i = 0; i < n; ++i)
      g -= (y[i] - expit(eta[i])) * sd.xs(i, j);
    g /= n;
    if (beta_std[j] == 0.0)
      worst = std::max(worst, std::fabs(g) - lambda);
    else
      worst = std::max(worst, std::fabs(g + lambda * (beta_std[j] > 0 ? 1.0 : -1.0)));
  }
  return std::max(worst, 0.0);
}

std::vector<double> lasso_lambda_grid(const DesignMatrix& x, const std::vector<double>& y,
                                      int n_lambda) {
  const auto sd = standardize(x);
  const std::size_t n = x.rows();
  double ybar = 0.0;
  for (double yi : y) ybar += yi;
  ybar /= n;
  double lam_max = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (!sd.penalized[j]) continue;
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) g += sd.xs(i, j) * (y[i] - ybar);
    lam_max = std::max(lam_max, std::fabs(g) / n);
  }
  if (lam_max <= 0.0) return {0.0};
  std::vector<double> grid(n_lambda);
  const double ratio = 1e-2;  // these are tiny datasets; a longer path only
                              // produces quasi-separated, never-selected fits
  for (int k = 0; k < n_lambda; ++k)
    grid[k] = lam_max * std::pow(ratio, static_cast<double>(k) / (n_lambda - 1));
  return grid;
}

double lasso_cv_lambda(const DesignMatrix& x, const std::vector<double>& y,
                       const std::vector<int>& groups, int n_lambda) {
  if (groups.size() != y.size())
    throw std::invalid_argument("groups length mismatch");
  const auto grid = lasso_lambda_grid(x, y, n_lambda);
  std::vector<int> fold_ids;
  for (int g : groups)
    if (std::find(fold_ids.begin(), fold_ids.end(), g) == fold_ids.end())
      fold_ids.push_back(g);
  if (fold_ids.size() < 2) return grid.front();

  std::vector<double> cv_dev(grid.size(), 0.0);
  for (int fold : fold_ids) {
    DesignMatrix xtr = make_design(0);
    std::vector<double> ytr, yte;
    std::vector<std::size_t> test_rows;
    std::vector<std::vector<double>> cols(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (groups[i] == fold) {
        test_rows.push_back(i);
        yte.push_back(y[i]);
      } else {
        ytr.push_back(y[i]);
        for (std::size_t j = 0; j < x.cols(); ++j) cols[j].push_back(x.values(i, j));
      }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) add_column(xtr, x.names[j], cols[j]);

    const auto sd = standardize(xtr);
    std::vector<double> beta(x.cols(), 0.0);  // warm start along the path
    for (std::size_t k = 0; k < grid.size(); ++k) {
      // The CV curve only needs ~4 decimal places; a looser tolerance and
      // outer cap than the final fit save most of the path's sweeps.
      cd_solve(sd, ytr, grid[k], beta, 25, 1e-6);
      double dev = 0.0;
      for (std::size_t t = 0; t < test_rows.size(); ++t) {
        double eta = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
          const double xs = (x.values(test_rows[t], j) - sd.mean[j]) / sd.scale[j];
          eta += beta[j] * (static_cast<std::ptrdiff_t>(j) == sd.intercept ? 1.0 : xs);
        }
        const double mu = std::clamp(expit(eta), 1e-10, 1.0 - 1e-10);
        double d = 0.0;
        if (yte[t] > 0.0) d += yte[t] * std::log(yte[t] / mu);
        if (yte[t] < 1.0) d += (1.0 - yte[t]) * std::log((1.0 - yte[t]) / (1.0 - mu));
        dev += 2.0 * d;
      }
      cv_dev[k] += dev;
    }
  }
  // Smallest CV deviance; prefer the larger lambda (grid is descending).
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (cv_dev[k] < cv_dev[best] - 1e-12) best = k;
  return grid[best];
}

}  // namespace nma
