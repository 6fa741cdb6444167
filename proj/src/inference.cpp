#include "nma/inference.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nma/errors.hpp"
#include "nma/rng.hpp"

namespace nma {

namespace {

// Type-7 quantile (linear interpolation between order statistics).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<std::size_t> bootstrap_indices(std::size_t n_studies, std::uint64_t seed,
                                           std::uint64_t replicate) {
  RngStream rng(seed, stream_id::bootstrap(replicate));
  std::vector<std::size_t> idx(n_studies);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_below(n_studies));
  return idx;
}

Dataset resample_studies(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.treatments = d.treatments;
  out.covariate_names = d.covariate_names;
  out.outcome_kind = d.outcome_kind;
  out.studies.reserve(indices.size());
  for (const auto i : indices) out.studies.push_back(d.studies[i]);
  return out;
}

std::vector<IntervalEstimate> cluster_bootstrap(const Dataset& d,
                                                const EstimatorClosure& estimator,
                                                std::size_t n_targets,
                                                const BootstrapConfig& cfg) {
  if (d.studies.empty()) throw inference_error("bootstrap needs a nonempty dataset");
  if (cfg.replicates < 2) throw inference_error("bootstrap needs >= 2 replicates");
  if (!(cfg.level > 0.0 && cfg.level < 1.0))
    throw inference_error("confidence level must lie in (0,1)");

  const auto full = estimator(d);
  if (full.size() != n_targets)
    throw inference_error("estimator closure returned the wrong number of targets");

  // replicate x target table; nullopt marks a discarded entry.
  std::vector<std::vector<std::optional<double>>> table(
      cfg.replicates, std::vector<std::optional<double>>(n_targets));

  auto run_range = [&](int lo, int hi) {
    for (int r = lo; r < hi; ++r) {
      const auto idx =
          bootstrap_indices(d.studies.size(), cfg.seed, static_cast<std::uint64_t>(r));
      const Dataset resampled = resample_studies(d, idx);
      try {
        auto est = estimator(resampled);
        if (est.size() == n_targets) table[r] = std::move(est);
      } catch (const error&) {
        // whole replicate discarded (failed fit)
      }
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || cfg.replicates < 2 * threads) {
    run_range(0, cfg.replicates);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.replicates + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(cfg.replicates, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<IntervalEstimate> out(n_targets);
  const double alpha = 1.0 - cfg.level;
  for (std::size_t k = 0; k < n_targets; ++k) {
    std::vector<double> kept;
    kept.reserve(cfg.replicates);
    for (int r = 0; r < cfg.replicates; ++r)
      if (table[r][k] && std::isfinite(*table[r][k])) kept.push_back(*table[r][k]);
    IntervalEstimate& iv = out[k];
    iv.n_effective = static_cast<int>(kept.size());
    iv.n_discarded = cfg.replicates - iv.n_effective;
    if (!full[k] || kept.empty()) {
      iv.valid = false;
      iv.point = std::numeric_limits<double>::quiet_NaN();
      iv.se = iv.lower = iv.upper = iv.point;
      continue;
    }
    iv.point = *full[k];
    double mean = 0.0;
    for (double v : kept) mean += v;
    mean /= kept.size();
    double ss = 0.0;
    bool constant = true;
    for (double v : kept) {
      ss += (v - mean) * (v - mean);
      constant = constant && v == kept.front();
    }
    iv.se = (kept.size() > 1 && !constant) ? std::sqrt(ss / (kept.size() - 1)) : 0.0;
    if (cfg.ci == CiKind::percentile) {
      std::sort(kept.begin(), kept.end());
      iv.lower = quantile_sorted(kept, alpha / 2.0);
      iv.upper = quantile_sorted(kept, 1.0 - alpha / 2.0);
    } else {
      const double z = norm_ppf(1.0 - alpha / 2.0);
      iv.lower = iv.point - z * iv.se;
      iv.upper = iv.point + z * iv.se;
    }
  }
  bool any_valid = false;
  for (const auto& iv : out) any_valid = any_valid || iv.valid;
  if (!any_valid)
    throw inference_error("every bootstrap replicate was discarded for every target");
  return out;
}

double coverage(const std::vector<IntervalEstimate>& intervals, double truth) {
  if (intervals.empty()) throw inference_error("coverage of an empty interval list");
  std::size_t hit = 0;
  for (const auto& iv : intervals)
    if (iv.lower <= truth && truth <= iv.upper) ++hit;
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

}  // namespace nma
