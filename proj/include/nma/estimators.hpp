#pragma once

// The marginal point estimators: unadjusted arm means, G-computation
// (outcome regression + standardization over the study covariate
// distribution), inverse-probability-of-treatment weighting, and targeted
// minimum loss-based estimation with an optional missing-outcome
// extension. Estimates target the treatment-specific mean outcome over the
// whole collection of study populations; contrasts are differences or
// ratios of two such means.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nma/data_model.hpp"
#include "nma/glm.hpp"
#include "nma/propensity.hpp"

namespace nma {

enum class Link { identity, logit, log };

enum class WeightConvention { n_over_s2, inv_s2, n, unweighted };

struct BoundsPolicy {
  enum class Kind { natural01, empirical, user } kind = Kind::natural01;
  double lower = 0.0, upper = 1.0;  // user bounds

  static BoundsPolicy natural01() { return {}; }
  static BoundsPolicy empirical() { return {Kind::empirical}; }
  static BoundsPolicy user(double lo, double hi) { return {Kind::user, lo, hi}; }
};

struct OutcomeModelSpec {
  Link link = Link::identity;
  // nullopt = all dataset covariates; an empty list = none.
  std::optional<std::vector<std::string>> covariates;
  WeightConvention weights = WeightConvention::n_over_s2;
  BoundsPolicy bounds;
  bool treatment_effects = true;  // include per-treatment indicators
  bool stratified = false;        // separate fit per treatment (fully interacted)
};

// P(outcome observed | study covariates, treatment), fitted on all arms
// with the treatment as extra indicator columns.
struct MissingnessModel {
  PropensityKind kind = PropensityKind::logistic;
  bool all_observed = false;  // no missing arms: probability identically 1
  std::optional<FitResult> fit;
  double lambda = 0.0;
  std::vector<std::string> covariate_names;
  std::vector<std::string> treatment_dummies;  // column names, by treatment id order
  int reference_treatment = 0;

  double observe_probability(const CovariateVector& w, int treatment_id) const;
};

MissingnessModel fit_missingness(const Dataset& d, PropensityKind kind,
                                 const LambdaPolicy& lambda_policy = {});

struct EstimateReport {
  std::string estimator;
  std::map<int, double> means;  // treatment id -> estimated mean outcome
  struct ContrastEstimate {
    TargetParameter target;
    double value = 0.0;
  };
  std::vector<ContrastEstimate> contrasts;

  // Diagnostics.
  std::map<int, double> epsilon;       // TMLE fluctuation coefficient per treatment
  std::map<int, double> eif_residual;  // empirical mean of the influence function
  std::vector<std::string> warnings;
  std::size_t n_studies = 0;
  std::size_t n_arms_used = 0;

  double mean_for(int treatment_id) const;
};

// Difference or ratio of two treatment means from a report.
double contrast(const EstimateReport& report, ContrastKind kind, int a,
                std::optional<int> b);

enum class UnadjustedConvention { arm_mean, pooled };

EstimateReport estimate_unadjusted(const Dataset& d,
                                   const std::vector<TargetParameter>& targets,
                                   UnadjustedConvention convention =
                                       UnadjustedConvention::arm_mean);

EstimateReport estimate_gcomp(const Dataset& d, const OutcomeModelSpec& spec,
                              const std::vector<TargetParameter>& targets);

// Fixed-effects log-link arm regression with standardization. Not the
// random-effects arm model found elsewhere in the literature; labelled
// "fe-log" so the two cannot be confused.
EstimateReport estimate_fe_log(const Dataset& d, OutcomeModelSpec spec,
                               const std::vector<TargetParameter>& targets);

EstimateReport estimate_iptw(const Dataset& d, const PropensityModel& pm,
                             const std::vector<TargetParameter>& targets,
                             const MissingnessModel* mm = nullptr,
                             bool hajek = false);

EstimateReport estimate_tmle(const Dataset& d, const OutcomeModelSpec& spec,
                             const PropensityModel& pm, const MissingnessModel* mm,
                             const std::vector<TargetParameter>& targets);

// Outcome scaling interval used by TMLE's logistic fluctuation.
struct ScaleBounds {
  double lower = 0.0, upper = 1.0;
  double scale(double y) const { return (y - lower) / (upper - lower); }
  double unscale(double s) const { return lower + (upper - lower) * s; }
};

// Empirical mean of the efficient influence function on the scaled
// outcome. scaled_outcome_a holds, per study, the scaled outcome of its
// arm under the target treatment (nullopt when the study has no such arm
// or the outcome is missing). Zero (to solver tolerance) at a converged
// TMLE; generally nonzero for unfluctuated predictions.
double eif_mean_residual(const std::vector<std::size_t>& arms_per_study,
                         const std::vector<std::optional<double>>& scaled_outcome_a,
                         const std::vector<double>& scaled_predictions,
                         const std::vector<double>& clever_denominators,
                         double scaled_mean);

// Arm weights under a convention; degenerate arms (sd == 0) are capped at
// the largest finite weight present.
std::vector<double> arm_weights(const std::vector<const ArmRecord*>& arms,
                                WeightConvention convention);

}  // namespace nma
