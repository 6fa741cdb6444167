#include "nma/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "nma/errors.hpp"

namespace nma {

namespace {

DesignMatrix study_design(const Dataset& d) {
  DesignMatrix x = make_design(d.studies.size());
  std::vector<double> ones(d.studies.size(), 1.0);
  add_column(x, "(Intercept)", ones);
  for (std::size_t c = 0; c < d.covariate_names.size(); ++c) {
    std::vector<double> col(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      col[i] = d.studies[i].covariates.values[c];
    add_column(x, d.covariate_names[c], col);
  }
  return x;
}

double raw_score_from_fit(const FitResult& fit, const CovariateVector& w) {
  double eta = fit.coef[0];  // intercept first by construction
  for (std::size_t c = 1; c < fit.coef.size(); ++c) eta += fit.coef[c] * w.values[c - 1];
  return expit(eta);
}

}  // namespace

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty vector");
  std::sort(values.begin(), values.end());
  std::size_t rank = static_cast<std::size_t>(std::floor(p * values.size())) + 1;
  rank = std::min(rank, values.size());
  return values[rank - 1];
}

std::vector<double> truncate_scores(const std::vector<double>& scores, double p) {
  if (!(p > 0.0 && p < 0.5))
    throw std::domain_error("truncation percentile must lie in (0, 0.5)");
  const double floor_value = nearest_rank_percentile(scores, p);
  std::vector<double> out = scores;
  for (double& s : out)
    if (s < floor_value) s = floor_value;
  return out;
}

PropensityModel fit_propensity(const Dataset& d, PropensityKind kind,
                               const LambdaPolicy& lambda_policy,
                               std::optional<double> truncation,
                               const std::vector<int>& only_treatments) {
  if (d.studies.size() < 2)
    throw estimation_error("propensity fitting needs at least two studies");
  if (truncation && !(*truncation > 0.0 && *truncation < 0.5))
    throw std::domain_error("truncation percentile must lie in (0, 0.5)");

  PropensityModel m;
  m.kind = kind;
  m.truncation = truncation;
  m.covariate_names = d.covariate_names;
  m.per_treatment.resize(d.treatments.size());

  const DesignMatrix x = study_design(d);
  std::vector<int> study_groups(d.studies.size());
  for (std::size_t i = 0; i < d.studies.size(); ++i) study_groups[i] = static_cast<int>(i);

  for (const auto& t : d.treatments) {
    auto& entry = m.per_treatment[t.id];
    if (!only_treatments.empty() &&
        std::find(only_treatments.begin(), only_treatments.end(), t.id) ==
            only_treatments.end()) {
      entry.skipped = true;
      continue;
    }
    std::vector<double> indicator(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      indicator[i] = d.studies[i].has_treatment(t.id) ? 1.0 : 0.0;
    const double total = std::accumulate(indicator.begin(), indicator.end(), 0.0);

    if (total == static_cast<double>(d.studies.size())) {
      entry.saturated = true;
      entry.warning = "treatment '" + t.label + "' present in every study; score == 1";
      entry.study_scores.assign(d.studies.size(), 1.0);
      continue;
    }
    if (total == 0.0) {
      entry.absent = true;
      entry.warning = "treatment '" + t.label + "' appears in no study";
      entry.study_scores.assign(d.studies.size(), 0.0);
      continue;
    }

    if (kind == PropensityKind::logistic) {
      entry.fit = fit_logistic(x, indicator, std::vector<double>(x.rows(), 1.0));
    } else {
      double lambda = lambda_policy.fixed_lambda;
      if (lambda_policy.mode == LambdaPolicy::Mode::loso_cv)
        lambda = lasso_cv_lambda(x, indicator, study_groups, lambda_policy.n_lambda);
      entry.lambda = lambda;
      entry.fit = fit_lasso_logistic(x, indicator, lambda);
    }
    if (!entry.fit->converged) entry.warning = entry.fit->warning;

    entry.study_scores.resize(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      entry.study_scores[i] = raw_score_from_fit(*entry.fit, d.studies[i].covariates);
    if (truncation) {
      entry.truncation_floor = nearest_rank_percentile(entry.study_scores, *truncation);
      entry.study_scores = truncate_scores(entry.study_scores, *truncation);
    }
  }
  return m;
}

double PropensityModel::score(const CovariateVector& w, int treatment_id) const {
  if (treatment_id < 0 || treatment_id >= static_cast<int>(per_treatment.size()))
    throw std::invalid_argument("no propensity model for treatment id " +
                                std::to_string(treatment_id));
  const auto& entry = per_treatment[treatment_id];
  if (entry.skipped)
    throw estimation_error("propensity model was not fitted for this treatment");
  if (entry.saturated) return 1.0;
  if (entry.absent)
    throw estimation_error("propensity score identically zero (treatment absent)");
  double s = raw_score_from_fit(*entry.fit, w);
  if (entry.truncation_floor) s = std::max(s, *entry.truncation_floor);
  return s;
}

double PropensityModel::study_score(std::size_t study_index, int treatment_id) const {
  if (treatment_id < 0 || treatment_id >= static_cast<int>(per_treatment.size()))
    throw std::invalid_argument("no propensity model for treatment id " +
                                std::to_string(treatment_id));
  const auto& entry = per_treatment[treatment_id];
  if (entry.skipped)
    throw estimation_error("propensity model was not fitted for this treatment");
  if (entry.absent)
    throw estimation_error("propensity score identically zero (treatment absent)");
  return entry.study_scores[study_index];
}

bool PropensityModel::all_converged() const {
  for (const auto& e : per_treatment)
    if (e.fit && !e.fit->converged) return false;
  return true;
}

PropensityModel PropensityModel::from_coefficients(
    const Dataset& d, const std::vector<std::vector<double>>& beta) {
  if (beta.size() != d.treatments.size())
    throw std::invalid_argument("one coefficient vector per treatment required");
  PropensityModel m;
  m.kind = PropensityKind::logistic;
  m.covariate_names = d.covariate_names;
  m.per_treatment.resize(d.treatments.size());
  for (std::size_t a = 0; a < beta.size(); ++a) {
    if (beta[a].size() != d.covariate_names.size() + 1)
      throw std::invalid_argument("coefficient vector must be intercept + covariates");
    auto& entry = m.per_treatment[a];
    FitResult fit;
    fit.names.push_back("(Intercept)");
    for (const auto& c : d.covariate_names) fit.names.push_back(c);
    fit.coef = beta[a];
    fit.converged = true;
    entry.fit = fit;
    entry.study_scores.resize(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      entry.study_scores[i] = raw_score_from_fit(fit, d.studies[i].covariates);
  }
  return m;
}

PositivityReport positivity_report(const PropensityModel& m, const Dataset& d) {
  PositivityReport report;
  for (const auto& t : d.treatments) {
    const auto& entry = m.per_treatment[t.id];
    if (entry.skipped) continue;
    PositivityReport::PerTreatment row;
    row.treatment_id = t.id;
    row.label = t.label;
    if (entry.absent) {
      row.min_score = row.max_score = 0.0;
      report.rows.push_back(row);
      continue;
    }
    row.min_score = 1.0;
    row.max_score = 0.0;
    for (std::size_t i = 0; i < d.studies.size(); ++i) {
      const double s = entry.study_scores[i];
      row.min_score = std::min(row.min_score, s);
      row.max_score = std::max(row.max_score, s);
      for (int k = 0; k < 3; ++k)
        if (s < PositivityReport::thresholds[k]) ++row.below_threshold[k];
      if (s < 0.10) row.flagged_studies.push_back(d.studies[i].study_id);
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string PositivityReport::to_text() const {
  std::ostringstream os;
  os << "Generalized propensity score summary (one score per study)\n";
  os << std::left << std::setw(28) << "treatment" << std::right << std::setw(10) << "min"
     << std::setw(10) << "max" << std::setw(9) << "<0.025" << std::setw(9) << "<0.05"
     << std::setw(9) << "<0.10" << "  flagged studies\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(28) << r.label << std::right << std::fixed
       << std::setprecision(4) << std::setw(10) << r.min_score << std::setw(10)
       << r.max_score << std::setw(9) << r.below_threshold[0] << std::setw(9)
       << r.below_threshold[1] << std::setw(9) << r.below_threshold[2] << "  ";
    for (std::size_t k = 0; k < r.flagged_studies.size(); ++k) {
      if (k) os << ',';
      os << r.flagged_studies[k];
    }
    if (r.flagged_studies.empty()) os << '-';
    os << '\n';
  }
  return os.str();
}

}  // namespace nma
