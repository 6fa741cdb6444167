#include "nma/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "nma/errors.hpp"

namespace nma {

namespace {

constexpr double kBoundaryNudge = 1e-6;

struct ObservedArm {
  std::size_t study_index;
  const Study* study;
  const ArmRecord* arm;
};

std::vector<ObservedArm> observed_arms(const Dataset& d) {
  std::vector<ObservedArm> out;
  for (std::size_t i = 0; i < d.studies.size(); ++i)
    for (const auto& arm : d.studies[i].arms)
      if (!arm.outcome.missing) out.push_back({i, &d.studies[i], &arm});
  return out;
}

std::vector<std::string> resolve_covariates(const Dataset& d,
                                            const OutcomeModelSpec& spec) {
  if (!spec.covariates.has_value()) return d.covariate_names;
  for (const auto& name : *spec.covariates)
    if (std::find(d.covariate_names.begin(), d.covariate_names.end(), name) ==
        d.covariate_names.end())
      throw estimation_error("unknown covariate '" + name + "' in outcome model");
  return *spec.covariates;
}

double covariate_value(const Dataset& d, const Study& s, const std::string& name) {
  for (std::size_t c = 0; c < d.covariate_names.size(); ++c)
    if (d.covariate_names[c] == name) return s.covariates.values[c];
  throw estimation_error("unknown covariate '" + name + "'");
}

std::set<int> treatments_needed(const std::vector<TargetParameter>& targets) {
  std::set<int> need;
  for (const auto& t : targets) {
    need.insert(t.a);
    if (t.b) need.insert(*t.b);
  }
  if (need.empty()) throw estimation_error("no targets requested");
  return need;
}

ScaleBounds resolve_bounds(const BoundsPolicy& policy,
                           const std::vector<double>& must_cover) {
  switch (policy.kind) {
    case BoundsPolicy::Kind::natural01:
      return ScaleBounds{0.0, 1.0};
    case BoundsPolicy::Kind::user:
      if (!(policy.lower < policy.upper))
        throw bounds_error("user bounds must satisfy lower < upper");
      return ScaleBounds{policy.lower, policy.upper};
    case BoundsPolicy::Kind::empirical: {
      if (must_cover.empty()) throw bounds_error("no values to derive empirical bounds");
      double lo = must_cover[0], hi = must_cover[0];
      for (double v : must_cover) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) {
        const double half = 0.1 * std::max(1.0, std::fabs(lo));
        return ScaleBounds{lo - half, hi + half};
      }
      // Exact min/max; the extreme observations land on the boundary and
      // are nudged into (0,1) at scaling time.
      return ScaleBounds{lo, hi};
    }
  }
  throw bounds_error("unknown bounds policy");
}

// Scale an observed outcome into (0,1). Natural and empirical bounds nudge
// boundary values inward; user bounds must already contain everything.
double scale_outcome(const ScaleBounds& b, const BoundsPolicy& policy, double y) {
  double s = b.scale(y);
  if (policy.kind != BoundsPolicy::Kind::user)
    return std::clamp(s, kBoundaryNudge, 1.0 - kBoundaryNudge);
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream os;
    os << "outcome " << y << " falls on or outside the scaling bounds [" << b.lower
       << ", " << b.upper << "]; use a wider bounds policy";
    throw bounds_error(os.str());
  }
  return s;
}

double scale_prediction(const ScaleBounds& b, const BoundsPolicy& policy, double pred) {
  const double s = b.scale(pred);
  if (policy.kind == BoundsPolicy::Kind::empirical)
    return std::clamp(s, kBoundaryNudge, 1.0 - kBoundaryNudge);
  if (!(s > 0.0 && s < 1.0)) {
    std::ostringstream os;
    os << "initial prediction " << pred << " falls outside the scaling bounds ["
       << b.lower << ", " << b.upper << "]; use a wider bounds policy";
    throw bounds_error(os.str());
  }
  return s;
}

struct OutcomeModel {
  Link link = Link::identity;
  BoundsPolicy bounds_policy;
  ScaleBounds bounds;  // meaningful for logit/log fits at construction
  std::vector<std::string> covariates;
  bool stratified = false;

  // Pooled fit.
  std::optional<FitResult> pooled;
  bool has_treatment_terms = true;
  int reference_treatment = -1;
  std::vector<int> dummy_column;  // treatment id -> column index, or -1

  // Stratified fits, by treatment id.
  std::vector<std::optional<FitResult>> per_treatment;

  std::size_t n_arms_used = 0;

  double eta(const Dataset& d, const Study& s, int a) const {
    if (stratified) {
      if (a >= static_cast<int>(per_treatment.size()) || !per_treatment[a])
        throw estimation_error("treatment id " + std::to_string(a) +
                               " has no observed arms to fit");
      const auto& fit = *per_treatment[a];
      double e = fit.coef[0];
      for (std::size_t c = 0; c < covariates.size(); ++c)
        e += fit.coef[1 + c] * covariate_value(d, s, covariates[c]);
      return e;
    }
    const auto& fit = *pooled;
    double e = fit.coef[0];
    if (has_treatment_terms && a != reference_treatment) {
      if (a >= static_cast<int>(dummy_column.size()) || dummy_column[a] < 0)
        throw estimation_error("treatment id " + std::to_string(a) +
                               " has no observed arms to fit");
      e += fit.coef[dummy_column[a]];
    }
    const std::size_t cov_offset = fit.coef.size() - covariates.size();
    for (std::size_t c = 0; c < covariates.size(); ++c)
      e += fit.coef[cov_offset + c] * covariate_value(d, s, covariates[c]);
    return e;
  }

  // Prediction on the natural outcome scale.
  double predict(const Dataset& d, const Study& s, int a) const {
    const double e = eta(d, s, a);
    switch (link) {
      case Link::identity:
        return e;
      case Link::logit:
        return bounds.unscale(expit(e));
      case Link::log:
        return std::exp(std::clamp(e, -kEtaCap, -1e-8));
    }
    return e;
  }

  // Prediction already mapped into the (0,1) fluctuation scale.
  double predict_scaled(const Dataset& d, const Study& s, int a,
                        const ScaleBounds& b, const BoundsPolicy& policy) const {
    const double e = eta(d, s, a);
    if (link == Link::logit) return expit(e);
    return scale_prediction(b, policy, predict(d, s, a));
  }

  bool converged() const {
    if (pooled && !pooled->converged) return false;
    for (const auto& f : per_treatment)
      if (f && !f->converged) return false;
    return true;
  }
};

OutcomeModel fit_outcome_model(const Dataset& d, const OutcomeModelSpec& spec) {
  if (spec.link == Link::log && d.outcome_kind != OutcomeKind::binary)
    throw estimation_error("log-link arm regression requires a binary outcome");
  if (spec.bounds.kind == BoundsPolicy::Kind::natural01 && spec.link == Link::logit &&
      d.outcome_kind != OutcomeKind::binary)
    throw bounds_error(
        "natural (0,1) bounds apply only to binary/proportion outcomes; "
        "use empirical or user bounds");

  OutcomeModel om;
  om.link = spec.link;
  om.bounds_policy = spec.bounds;
  om.covariates = resolve_covariates(d, spec);
  om.stratified = spec.stratified;

  const auto arms = observed_arms(d);
  if (arms.empty()) throw estimation_error("no observed arms to fit an outcome model");
  om.n_arms_used = arms.size();

  std::vector<const ArmRecord*> arm_ptrs;
  for (const auto& oa : arms) arm_ptrs.push_back(oa.arm);
  const auto weights = arm_weights(arm_ptrs, spec.weights);

  std::vector<double> y(arms.size());
  for (std::size_t r = 0; r < arms.size(); ++r) y[r] = arms[r].arm->outcome.mean;
  if (spec.link == Link::logit) {
    om.bounds = resolve_bounds(spec.bounds, y);
    for (double& v : y) v = scale_outcome(om.bounds, spec.bounds, v);
  }

  auto covariate_columns = [&](const std::vector<ObservedArm>& rows, DesignMatrix& x) {
    for (const auto& name : om.covariates) {
      std::vector<double> col(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        col[r] = covariate_value(d, *rows[r].study, name);
      add_column(x, name, col);
    }
  };

  if (spec.stratified) {
    om.per_treatment.resize(d.treatments.size());
    for (const auto& t : d.treatments) {
      std::vector<ObservedArm> rows;
      std::vector<double> yt, wt;
      for (std::size_t r = 0; r < arms.size(); ++r)
        if (arms[r].arm->treatment.id == t.id) {
          rows.push_back(arms[r]);
          yt.push_back(y[r]);
          wt.push_back(weights[r]);
        }
      if (rows.empty()) continue;
      DesignMatrix x = make_design(rows.size());
      add_intercept(x);
      covariate_columns(rows, x);
      switch (spec.link) {
        case Link::identity:
          om.per_treatment[t.id] = fit_weighted_linear(x, yt, wt);
          break;
        case Link::logit:
          om.per_treatment[t.id] = fit_logistic(x, yt, wt);
          break;
        case Link::log:
          om.per_treatment[t.id] = fit_loglink_binomial(x, yt, wt);
          break;
      }
    }
    return om;
  }

  // Pooled fit: intercept, treatment indicators, covariates.
  std::set<int> with_arms;
  for (const auto& oa : arms) with_arms.insert(oa.arm->treatment.id);
  om.reference_treatment = *with_arms.begin();
  om.dummy_column.assign(d.treatments.size(), -1);

  DesignMatrix x = make_design(arms.size());
  add_intercept(x);
  om.has_treatment_terms = spec.treatment_effects;
  if (spec.treatment_effects) {
    for (int tid : with_arms) {
      if (tid == om.reference_treatment) continue;
      std::vector<double> col(arms.size());
      for (std::size_t r = 0; r < arms.size(); ++r)
        col[r] = arms[r].arm->treatment.id == tid ? 1.0 : 0.0;
      om.dummy_column[tid] = static_cast<int>(x.cols());
      add_column(x, "trt:" + d.treatments[tid].label, col);
    }
  }
  covariate_columns(arms, x);

  switch (spec.link) {
    case Link::identity:
      om.pooled = fit_weighted_linear(x, y, weights);
      break;
    case Link::logit:
      om.pooled = fit_logistic(x, y, weights);
      break;
    case Link::log:
      om.pooled = fit_loglink_binomial(x, y, weights);
      break;
  }
  return om;
}

void check_targets(const Dataset& d, const std::vector<TargetParameter>& targets) {
  for (const auto& t : targets) {
    if (t.a < 0 || t.a >= static_cast<int>(d.treatments.size()) ||
        (t.b && (*t.b < 0 || *t.b >= static_cast<int>(d.treatments.size()))))
      throw estimation_error("target refers to an unregistered treatment id");
    if (t.kind != ContrastKind::treatment_mean && !t.b)
      throw estimation_error("contrast target needs a comparator treatment");
    if (t.kind == ContrastKind::risk_ratio && d.outcome_kind != OutcomeKind::binary)
      throw estimation_error("risk ratios are defined for binary outcomes only");
  }
}

void fill_contrasts(EstimateReport& report, const std::vector<TargetParameter>& targets) {
  for (const auto& t : targets)
    report.contrasts.push_back({t, contrast(report, t.kind, t.a, t.b)});
}

}  // namespace

std::vector<double> arm_weights(const std::vector<const ArmRecord*>& arms,
                                WeightConvention convention) {
  std::vector<double> w(arms.size(), 1.0);
  if (convention == WeightConvention::unweighted) return w;
  bool any_finite = false;
  double max_finite = 0.0;
  for (std::size_t r = 0; r < arms.size(); ++r) {
    const auto& a = *arms[r];
    const double s2 = a.outcome.sd * a.outcome.sd;
    switch (convention) {
      case WeightConvention::n_over_s2:
        w[r] = s2 > 0.0 ? static_cast<double>(a.n) / s2
                        : std::numeric_limits<double>::infinity();
        break;
      case WeightConvention::inv_s2:
        w[r] = s2 > 0.0 ? 1.0 / s2 : std::numeric_limits<double>::infinity();
        break;
      case WeightConvention::n:
        w[r] = static_cast<double>(a.n);
        break;
      case WeightConvention::unweighted:
        break;
    }
    if (std::isfinite(w[r])) {
      any_finite = true;
      max_finite = std::max(max_finite, w[r]);
    }
  }
  // Degenerate arms (sd == 0) get the largest finite weight in the dataset.
  for (double& wi : w)
    if (!std::isfinite(wi)) wi = any_finite ? max_finite : 1.0;
  return w;
}

double EstimateReport::mean_for(int treatment_id) const {
  const auto it = means.find(treatment_id);
  if (it == means.end())
    throw estimation_error("no estimate for treatment id " + std::to_string(treatment_id));
  return it->second;
}

double contrast(const EstimateReport& report, ContrastKind kind, int a,
                std::optional<int> b) {
  const double ma = report.mean_for(a);
  switch (kind) {
    case ContrastKind::treatment_mean:
      return ma;
    case ContrastKind::mean_difference: {
      if (!b) throw estimation_error("difference contrast needs a comparator");
      return ma - report.mean_for(*b);
    }
    case ContrastKind::risk_ratio: {
      if (!b) throw estimation_error("ratio contrast needs a comparator");
      const double mb = report.mean_for(*b);
      if (mb == 0.0) throw estimation_error("risk ratio denominator is zero");
      return ma / mb;
    }
  }
  throw estimation_error("unknown contrast kind");
}

MissingnessModel fit_missingness(const Dataset& d, PropensityKind kind,
                                 const LambdaPolicy& lambda_policy) {
  MissingnessModel m;
  m.kind = kind;
  m.covariate_names = d.covariate_names;
  m.reference_treatment = d.treatments.empty() ? 0 : d.treatments.front().id;

  bool any_missing = false;
  for (const auto& s : d.studies)
    for (const auto& a : s.arms) any_missing = any_missing || a.outcome.missing;
  if (!any_missing) {
    m.all_observed = true;
    return m;
  }

  std::size_t rows = d.n_arms();
  DesignMatrix x = make_design(rows);
  std::vector<double> observed;
  std::vector<int> groups;
  add_intercept(x);
  for (const auto& name : d.covariate_names) {
    std::vector<double> col;
    for (const auto& s : d.studies)
      for (std::size_t j = 0; j < s.arms.size(); ++j)
        col.push_back(covariate_value(d, s, name));
    add_column(x, name, col);
  }
  m.treatment_dummies.assign(d.treatments.size(), "");
  for (const auto& t : d.treatments) {
    if (t.id == m.reference_treatment) continue;
    std::vector<double> col;
    for (const auto& s : d.studies)
      for (const auto& a : s.arms) col.push_back(a.treatment.id == t.id ? 1.0 : 0.0);
    m.treatment_dummies[t.id] = "trt:" + t.label;
    add_column(x, m.treatment_dummies[t.id], col);
  }
  int study_index = 0;
  for (const auto& s : d.studies) {
    for (const auto& a : s.arms) {
      observed.push_back(a.outcome.missing ? 0.0 : 1.0);
      groups.push_back(study_index);
    }
    ++study_index;
  }

  if (kind == PropensityKind::logistic) {
    m.fit = fit_logistic(x, observed, std::vector<double>(rows, 1.0));
  } else {
    double lambda = lambda_policy.fixed_lambda;
    if (lambda_policy.mode == LambdaPolicy::Mode::loso_cv)
      lambda = lasso_cv_lambda(x, observed, groups, lambda_policy.n_lambda);
    m.lambda = lambda;
    m.fit = fit_lasso_logistic(x, observed, lambda);
  }
  return m;
}

double MissingnessModel::observe_probability(const CovariateVector& w,
                                             int treatment_id) const {
  if (all_observed) return 1.0;
  const auto& f = *fit;
  double eta = f.coef[0];
  for (std::size_t c = 0; c < covariate_names.size(); ++c)
    eta += f.coef[1 + c] * w.values[c];
  if (treatment_id != reference_treatment) {
    if (treatment_id < 0 || treatment_id >= static_cast<int>(treatment_dummies.size()))
      throw estimation_error("missingness model: unknown treatment id");
    eta += f.coefficient(treatment_dummies[treatment_id]);
  }
  return expit(eta);
}

EstimateReport estimate_unadjusted(const Dataset& d,
                                   const std::vector<TargetParameter>& targets,
                                   UnadjustedConvention convention) {
  check_targets(d, targets);
  EstimateReport report;
  report.estimator = "unadjusted";
  report.n_studies = d.studies.size();
  for (int tid : treatments_needed(targets)) {
    double sum = 0.0, weight = 0.0;
    std::size_t count = 0;
    for (const auto& s : d.studies)
      for (const auto& arm : s.arms) {
        if (arm.treatment.id != tid || arm.outcome.missing) continue;
        const double w =
            convention == UnadjustedConvention::arm_mean ? 1.0 : static_cast<double>(arm.n);
        sum += w * arm.outcome.mean;
        weight += w;
        ++count;
      }
    if (count == 0)
      throw estimation_error("treatment '" + d.treatments[tid].label +
                             "' has no arm with an observed outcome");
    report.means[tid] = sum / weight;
    report.n_arms_used += count;
  }
  fill_contrasts(report, targets);
  return report;
}

EstimateReport estimate_gcomp(const Dataset& d, const OutcomeModelSpec& spec,
                              const std::vector<TargetParameter>& targets) {
  check_targets(d, targets);
  const auto om = fit_outcome_model(d, spec);
  EstimateReport report;
  report.estimator = "gcomp";
  report.n_studies = d.studies.size();
  report.n_arms_used = om.n_arms_used;
  if (!om.converged()) report.warnings.push_back("outcome model did not converge");
  for (int tid : treatments_needed(targets)) {
    double sum = 0.0;
    for (const auto& s : d.studies) sum += om.predict(d, s, tid);
    report.means[tid] = sum / static_cast<double>(d.studies.size());
  }
  fill_contrasts(report, targets);
  return report;
}

EstimateReport estimate_fe_log(const Dataset& d, OutcomeModelSpec spec,
                               const std::vector<TargetParameter>& targets) {
  spec.link = Link::log;
  auto report = estimate_gcomp(d, spec, targets);
  report.estimator = "fe-log";
  return report;
}

EstimateReport estimate_iptw(const Dataset& d, const PropensityModel& pm,
                             const std::vector<TargetParameter>& targets,
                             const MissingnessModel* mm, bool hajek) {
  check_targets(d, targets);
  EstimateReport report;
  report.estimator = "iptw";
  report.n_studies = d.studies.size();
  if (!pm.all_converged())
    report.warnings.push_back("a propensity fit did not converge (separation)");

  bool warned_missing = false;
  for (int tid : treatments_needed(targets)) {
    double sum = 0.0, denom_sum = 0.0;
    std::size_t contributing = 0;
    for (std::size_t i = 0; i < d.studies.size(); ++i) {
      const auto& s = d.studies[i];
      const int j = s.arm_index(tid);
      if (j < 0) continue;
      const auto& arm = s.arms[static_cast<std::size_t>(j)];
      if (arm.outcome.missing) {
        if (!mm && !warned_missing) {
          report.warnings.push_back(
              "arms with missing outcomes excluded (no missingness model supplied)");
          warned_missing = true;
        }
        continue;
      }
      const double g = pm.study_score(i, tid);
      const double q = mm ? mm->observe_probability(s.covariates, tid) : 1.0;
      const double denom = g * q;
      if (denom == 0.0)
        throw positivity_error("propensity (x observation) weight denominator is zero for study " +
                               s.study_id);
      sum += arm.outcome.mean / denom;
      denom_sum += 1.0 / denom;
      ++contributing;
    }
    if (contributing == 0)
      throw estimation_error("treatment '" + d.treatments[tid].label +
                             "' has no contributing arm for IPTW");
    report.means[tid] =
        hajek ? sum / denom_sum : sum / static_cast<double>(d.studies.size());
    report.n_arms_used += contributing;
  }
  fill_contrasts(report, targets);
  return report;
}

double eif_mean_residual(const std::vector<std::size_t>& arms_per_study,
                         const std::vector<std::optional<double>>& scaled_outcome_a,
                         const std::vector<double>& scaled_predictions,
                         const std::vector<double>& clever_denominators,
                         double scaled_mean) {
  double sum = 0.0;
  std::size_t total_arms = 0;
  for (std::size_t i = 0; i < arms_per_study.size(); ++i) {
    total_arms += arms_per_study[i];
    if (scaled_outcome_a[i])
      sum += (*scaled_outcome_a[i] - scaled_predictions[i]) / clever_denominators[i];
    sum += static_cast<double>(arms_per_study[i]) *
           (scaled_predictions[i] - scaled_mean);
  }
  return sum / static_cast<double>(total_arms);
}

EstimateReport estimate_tmle(const Dataset& d, const OutcomeModelSpec& spec,
                             const PropensityModel& pm, const MissingnessModel* mm,
                             const std::vector<TargetParameter>& targets) {
  check_targets(d, targets);
  const auto om = fit_outcome_model(d, spec);
  const auto need = treatments_needed(targets);

  EstimateReport report;
  report.estimator = "tmle";
  report.n_studies = d.studies.size();
  report.n_arms_used = om.n_arms_used;
  if (!om.converged()) report.warnings.push_back("outcome model did not converge");
  if (!pm.all_converged())
    report.warnings.push_back("a propensity fit did not converge (separation)");

  // Establish the (0,1) working scale. A logit-link initial fit already
  // carries its bounds; an identity-link fit derives empirical bounds wide
  // enough to cover every observed outcome and every initial prediction.
  ScaleBounds bounds;
  if (om.link == Link::logit) {
    bounds = om.bounds;
  } else if (spec.bounds.kind == BoundsPolicy::Kind::empirical) {
    std::vector<double> cover;
    for (const auto& s : d.studies)
      for (const auto& arm : s.arms)
        if (!arm.outcome.missing) cover.push_back(arm.outcome.mean);
    for (int tid : need)
      for (const auto& s : d.studies) cover.push_back(om.predict(d, s, tid));
    bounds = resolve_bounds(spec.bounds, cover);
  } else {
    bounds = resolve_bounds(spec.bounds, {});
  }

  for (int tid : need) {
    // Initial predictions on the working scale, one per study.
    std::vector<double> pred(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      pred[i] = om.predict_scaled(d, d.studies[i], tid, bounds, spec.bounds);

    // Clever covariate denominators g_a(W) (optionally times the
    // probability of an observed outcome), one per study.
    std::vector<double> denom(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i) {
      const double g = pm.study_score(i, tid);
      const double q =
          mm ? mm->observe_probability(d.studies[i].covariates, tid) : 1.0;
      denom[i] = g * q;
      if (denom[i] == 0.0)
        throw positivity_error("zero clever-covariate denominator for study " +
                               d.studies[i].study_id);
    }

    // Fluctuation on the arms that evaluated this treatment with an
    // observed outcome.
    std::vector<double> ys, offsets, clever;
    std::vector<std::optional<double>> scaled_outcome_a(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i) {
      const int j = d.studies[i].arm_index(tid);
      if (j < 0) continue;
      const auto& arm = d.studies[i].arms[static_cast<std::size_t>(j)];
      if (arm.outcome.missing) continue;
      scaled_outcome_a[i] = scale_outcome(bounds, spec.bounds, arm.outcome.mean);
      ys.push_back(*scaled_outcome_a[i]);
      offsets.push_back(logit(pred[i]));
      clever.push_back(1.0 / denom[i]);
    }
    if (ys.empty())
      throw estimation_error("treatment '" + d.treatments[tid].label +
                             "' has no arm with an observed outcome");
    const auto fluct =
        fit_fluctuation(ys, offsets, clever, std::vector<double>(ys.size(), 1.0));
    report.epsilon[tid] = fluct.epsilon;

    // Update every study's prediction and average. An epsilon of exactly
    // zero is the identity update; averaging the raw predictions on the
    // G-computation code path keeps that equality bit-exact.
    std::vector<double> updated(d.studies.size());
    double mean_scaled = 0.0;
    if (fluct.epsilon == 0.0) {
      updated = pred;
      double sum = 0.0;
      for (const auto& s : d.studies) sum += om.predict(d, s, tid);
      report.means[tid] = sum / static_cast<double>(d.studies.size());
      for (double v : updated) mean_scaled += v;
      mean_scaled /= static_cast<double>(d.studies.size());
    } else {
      for (std::size_t i = 0; i < d.studies.size(); ++i)
        updated[i] = expit(logit(pred[i]) + fluct.epsilon / denom[i]);
      for (double v : updated) mean_scaled += v;
      mean_scaled /= static_cast<double>(d.studies.size());
      report.means[tid] = bounds.unscale(mean_scaled);
    }

    std::vector<std::size_t> arms_per_study(d.studies.size());
    for (std::size_t i = 0; i < d.studies.size(); ++i)
      arms_per_study[i] = d.studies[i].arms.size();
    report.eif_residual[tid] =
        eif_mean_residual(arms_per_study, scaled_outcome_a, updated, denom, mean_scaled);
  }
  fill_contrasts(report, targets);
  return report;
}

}  // namespace nma
