#include "nma/pipeline.hpp"

#include "nma/errors.hpp"

namespace nma {

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::unadjusted: return "unadjusted";
    case EstimatorKind::gcomp: return "gcomp";
    case EstimatorKind::iptw: return "iptw";
    case EstimatorKind::tmle: return "tmle";
    case EstimatorKind::fe_log: return "fe-log";
  }
  return "?";
}

std::optional<EstimatorKind> estimator_from_name(const std::string& name) {
  if (name == "unadjusted") return EstimatorKind::unadjusted;
  if (name == "gcomp") return EstimatorKind::gcomp;
  if (name == "iptw") return EstimatorKind::iptw;
  if (name == "tmle") return EstimatorKind::tmle;
  if (name == "fe-log") return EstimatorKind::fe_log;
  return std::nullopt;
}

namespace {

std::vector<int> target_treatments(const std::vector<TargetParameter>& targets) {
  std::vector<int> ids;
  for (const auto& t : targets) {
    ids.push_back(t.a);
    if (t.b) ids.push_back(*t.b);
  }
  return ids;
}

}  // namespace

EstimateReport run_pipeline(const Dataset& d, const PipelineSpec& spec,
                            const std::vector<TargetParameter>& targets) {
  switch (spec.kind) {
    case EstimatorKind::unadjusted:
      return estimate_unadjusted(d, targets, spec.unadjusted_convention);
    case EstimatorKind::gcomp:
      return estimate_gcomp(d, spec.outcome, targets);
    case EstimatorKind::fe_log:
      return estimate_fe_log(d, spec.outcome, targets);
    case EstimatorKind::iptw: {
      const auto pm = fit_propensity(d, spec.propensity, spec.lambda_policy,
                                     spec.truncation, target_treatments(targets));
      if (spec.use_missingness) {
        const auto mm = fit_missingness(d, spec.missingness_kind, spec.lambda_policy);
        return estimate_iptw(d, pm, targets, &mm, spec.hajek);
      }
      return estimate_iptw(d, pm, targets, nullptr, spec.hajek);
    }
    case EstimatorKind::tmle: {
      const auto pm = fit_propensity(d, spec.propensity, spec.lambda_policy,
                                     spec.truncation, target_treatments(targets));
      if (spec.use_missingness) {
        const auto mm = fit_missingness(d, spec.missingness_kind, spec.lambda_policy);
        return estimate_tmle(d, spec.outcome, pm, &mm, targets);
      }
      return estimate_tmle(d, spec.outcome, pm, nullptr, targets);
    }
  }
  throw estimation_error("unknown estimator kind");
}

EstimatorClosure make_pipeline_closure(const PipelineSpec& spec,
                                       const std::vector<TargetParameter>& targets) {
  return [spec, targets](const Dataset& d) -> std::vector<std::optional<double>> {
    std::vector<std::optional<double>> out(targets.size());
    try {
      const auto report = run_pipeline(d, spec, targets);
      for (std::size_t k = 0; k < targets.size(); ++k)
        out[k] = report.contrasts[k].value;
      return out;
    } catch (const error&) {
      // Retry target by target so one vanished treatment does not void the
      // rest of the replicate.
      for (std::size_t k = 0; k < targets.size(); ++k) {
        try {
          const auto report = run_pipeline(d, spec, {targets[k]});
          out[k] = report.contrasts[0].value;
        } catch (const error&) {
          out[k] = std::nullopt;
        }
      }
      return out;
    }
  };
}

}  // namespace nma
