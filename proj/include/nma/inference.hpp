#pragma once

// Clustered nonparametric bootstrap: studies are resampled with
// replacement (each drawn study carries all of its arms), the full
// estimation pipeline is re-run on every resample, and standard errors /
// confidence intervals come from the retained replicate estimates.
// Replicate r draws its indices from RngStream(seed, bootstrap stream r),
// so results are identical whether replicates run serially or in parallel.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nma/data_model.hpp"

namespace nma {

enum class CiKind { percentile, normal };

struct BootstrapConfig {
  int replicates = 1000;
  std::uint64_t seed = 0;
  CiKind ci = CiKind::percentile;
  double level = 0.95;
  int threads = 1;
};

struct IntervalEstimate {
  bool valid = true;   // false: target not estimable on the full data, or
                       // every replicate was discarded for it
  double point = 0.0;  // full-data estimate
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int n_effective = 0;  // replicates retained
  int n_discarded = 0;
};

// An estimator pipeline evaluated on a (resampled) dataset. One value per
// target; nullopt marks a target that could not be estimated on this
// resample (e.g. its treatment vanished). Throwing discards the replicate
// for every target.
using EstimatorClosure =
    std::function<std::vector<std::optional<double>>(const Dataset&)>;

std::vector<IntervalEstimate> cluster_bootstrap(const Dataset& d,
                                                const EstimatorClosure& estimator,
                                                std::size_t n_targets,
                                                const BootstrapConfig& cfg);

// Fraction of intervals with lower <= truth <= upper.
double coverage(const std::vector<IntervalEstimate>& intervals, double truth);

// Resample used by the bootstrap, exposed for the clustering tests:
// indices drawn uniformly with replacement from [0, n_studies).
std::vector<std::size_t> bootstrap_indices(std::size_t n_studies,
                                           std::uint64_t seed, std::uint64_t replicate);
Dataset resample_studies(const Dataset& d, const std::vector<std::size_t>& indices);

}  // namespace nma
