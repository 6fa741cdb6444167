#pragma once

// One place that wires a full estimation pipeline together (propensity +
// missingness + outcome model + estimator) so that the CLI, the bootstrap
// and the simulation harness all run exactly the same code path.

#include <optional>
#include <string>
#include <vector>

#include "nma/estimators.hpp"
#include "nma/inference.hpp"

namespace nma {

enum class EstimatorKind { unadjusted, gcomp, iptw, tmle, fe_log };

std::string estimator_name(EstimatorKind kind);
std::optional<EstimatorKind> estimator_from_name(const std::string& name);

struct PipelineSpec {
  EstimatorKind kind = EstimatorKind::gcomp;
  OutcomeModelSpec outcome;
  PropensityKind propensity = PropensityKind::logistic;
  LambdaPolicy lambda_policy;
  std::optional<double> truncation;  // percentile in (0, 0.5)
  bool use_missingness = false;      // augment weights for missing outcomes
  PropensityKind missingness_kind = PropensityKind::logistic;
  UnadjustedConvention unadjusted_convention = UnadjustedConvention::arm_mean;
  bool hajek = false;
};

// Fit whatever the estimator needs on this dataset and estimate.
EstimateReport run_pipeline(const Dataset& d, const PipelineSpec& spec,
                            const std::vector<TargetParameter>& targets);

// Bootstrap-ready closure: one contrast value per target, nullopt for
// targets that cannot be estimated on a given (re)sample.
EstimatorClosure make_pipeline_closure(const PipelineSpec& spec,
                                       const std::vector<TargetParameter>& targets);

}  // namespace nma
