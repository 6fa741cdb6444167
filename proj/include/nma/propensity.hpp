#pragma once

// Generalized propensity scores: for each treatment a, a model of
// P(a is evaluated by the study | study covariates), fitted with one row
// per study. Includes percentile truncation and positivity diagnostics.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nma/data_model.hpp"
#include "nma/glm.hpp"

namespace nma {

enum class PropensityKind { logistic, lasso_logistic };

// How the lasso penalty is chosen when kind == lasso_logistic.
struct LambdaPolicy {
  enum class Mode { loso_cv, fixed } mode = Mode::loso_cv;
  double fixed_lambda = 0.0;
  int n_lambda = 50;
};

struct PropensityModel {
  struct PerTreatment {
    // Exactly one of these states holds:
    //   saturated  - treatment present in every study, score identically 1
    //   absent     - treatment in no study; using it downstream is an error
    //   fitted     - logistic / lasso-logistic fit on the study indicator
    bool saturated = false;
    bool absent = false;
    bool skipped = false;  // excluded via the only_treatments filter
    std::optional<FitResult> fit;
    double lambda = 0.0;                  // lasso only
    std::vector<double> study_scores;     // truncated scores, one per study
    std::optional<double> truncation_floor;
    std::optional<std::string> warning;
  };

  PropensityKind kind = PropensityKind::logistic;
  std::optional<double> truncation;  // percentile p in (0, 0.5)
  std::vector<std::string> covariate_names;
  std::vector<PerTreatment> per_treatment;  // indexed by treatment id

  // Score for an arbitrary covariate vector (truncation floor applied).
  double score(const CovariateVector& w, int treatment_id) const;
  // Score for study i of the dataset the model was fitted on.
  double study_score(std::size_t study_index, int treatment_id) const;
  bool all_converged() const;

  // Diagnostic constructor: fixed logistic coefficients for every
  // treatment, bypassing estimation (used to inject known assignment rules).
  static PropensityModel from_coefficients(const Dataset& d,
                                           const std::vector<std::vector<double>>& beta);
};

// Fit one indicator model per registered treatment. Preconditions: at
// least two studies. Degenerate indicators (all ones / all zeros) become
// saturated/absent entries with a warning instead of a fit. A nonempty
// only_treatments restricts fitting to those ids (the others are marked
// skipped and cannot be scored).
PropensityModel fit_propensity(const Dataset& d, PropensityKind kind,
                               const LambdaPolicy& lambda_policy = {},
                               std::optional<double> truncation = {},
                               const std::vector<int>& only_treatments = {});

// Nearest-rank percentile truncation: values strictly below the p-th
// percentile (rank floor(p*n)+1) are raised to that percentile.
std::vector<double> truncate_scores(const std::vector<double>& scores, double p);
double nearest_rank_percentile(std::vector<double> values, double p);

struct PositivityReport {
  struct PerTreatment {
    int treatment_id = 0;
    std::string label;
    double min_score = 0.0;
    double max_score = 0.0;
    // Counts of studies with score below 0.025, 0.05, 0.10.
    std::array<int, 3> below_threshold = {0, 0, 0};
    std::vector<std::string> flagged_studies;  // score < 0.10
  };
  static constexpr double thresholds[3] = {0.025, 0.05, 0.10};
  std::vector<PerTreatment> rows;

  std::string to_text() const;
};

PositivityReport positivity_report(const PropensityModel& m, const Dataset& d);

}  // namespace nma
