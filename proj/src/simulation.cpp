#include "nma/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "nma/errors.hpp"
#include "nma/rng.hpp"

namespace nma {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sequential weighted draw of two distinct treatments: draw the first with
// weights p_k / sum(p), remove it, renormalize, draw the second.
std::pair<int, int> draw_treatment_pair(const DgpConfig& cfg, double w, RngStream& rng) {
  std::array<double, 4> p;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    p[k] = sigmoid(cfg.treatment_logit_slopes[k] * w);
    total += p[k];
  }
  const double u1 = rng.uniform() * total;
  int first = 0;
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    acc += p[k];
    if (u1 <= acc || k == 3) {
      first = k;
      break;
    }
  }
  const double rem = total - p[first];
  const double u2 = rng.uniform() * rem;
  int second = -1;
  acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (k == first) continue;
    second = k;  // falls through to the last candidate on rounding slack
    acc += p[k];
    if (u2 <= acc) break;
  }
  return {first, second};
}

}  // namespace

double true_inclusion_probability(const DgpConfig& cfg, int treatment_id, double w) {
  std::array<double, 4> p;
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    p[k] = sigmoid(cfg.treatment_logit_slopes[k] * w);
    total += p[k];
  }
  double prob = p[treatment_id] / total;  // drawn first
  for (int m = 0; m < 4; ++m) {          // drawn second after m
    if (m == treatment_id) continue;
    prob += (p[m] / total) * (p[treatment_id] / (total - p[m]));
  }
  return prob;
}

std::array<double, 4> true_means(const DgpConfig& cfg) {
  std::array<double, 4> m;
  for (int k = 0; k < 4; ++k) m[k] = cfg.w_mean + cfg.beta[k];
  return m;
}

Dataset generate_dataset(const DgpConfig& cfg) {
  if (cfg.n_studies < 1) throw std::invalid_argument("n_studies must be positive");
  Dataset d;
  d.outcome_kind = OutcomeKind::continuous;
  d.covariate_names = {"W"};
  for (int k = 0; k < 4; ++k)
    d.treatments.push_back(TreatmentCode{k, std::to_string(k + 1)});

  d.studies.reserve(cfg.n_studies);
  for (int i = 0; i < cfg.n_studies; ++i) {
    RngStream rng(cfg.seed, stream_id::sim_study(0, static_cast<std::uint64_t>(i)));
    const double w = static_cast<double>(rng.poisson(cfg.w_mean));
    const auto [a1, a2] = draw_treatment_pair(cfg, w, rng);

    const double mu = cfg.recruitment_base *
                      std::exp(cfg.recruitment_w_coef * w + cfg.gamma[a1] + cfg.gamma[a2]);
    long n = rng.poisson(mu);
    while (n == 0) n = rng.poisson(mu);  // empty studies are redrawn

    Study s;
    s.study_id = "sim" + std::to_string(i + 1);
    s.covariates.values = {w};
    for (int arm_treatment : {a1, a2}) {
      // Welford accumulation of the subject-level outcomes.
      double mean = 0.0, m2 = 0.0;
      for (long k = 0; k < n; ++k) {
        const double x = rng.normal(w, cfg.x_sd);
        const double y = rng.normal(x + cfg.beta[arm_treatment], cfg.y_sd);
        const double delta = y - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (y - mean);
      }
      const double sd = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
      ArmRecord arm;
      arm.treatment = d.treatments[arm_treatment];
      arm.n = n;
      arm.outcome = OutcomeSummary::continuous(mean, sd);
      s.arms.push_back(arm);
    }
    d.studies.push_back(std::move(s));
  }
  return d;
}

std::vector<TargetParameter> scenario_targets() {
  std::vector<TargetParameter> targets;
  for (int k = 1; k < 4; ++k)
    targets.push_back(TargetParameter{ContrastKind::mean_difference, k, 0});
  return targets;
}

OutcomeModelSpec misspecify(OutcomeModelSpec spec) {
  spec.link = Link::logit;
  spec.bounds = BoundsPolicy::empirical();
  return spec;
}

namespace {

ScenarioEstimator stock_estimator(EstimatorKind kind, const OutcomeModelSpec& outcome) {
  PipelineSpec spec;
  spec.kind = kind;
  spec.outcome = outcome;
  spec.propensity = PropensityKind::logistic;
  return ScenarioEstimator{estimator_name(kind),
                           make_pipeline_closure(spec, scenario_targets())};
}

}  // namespace

std::vector<ScenarioEstimator> scenario_estimators_correct() {
  OutcomeModelSpec outcome;  // identity link, all covariates, N/S^2 weights
  outcome.bounds = BoundsPolicy::empirical();
  return {stock_estimator(EstimatorKind::gcomp, outcome),
          stock_estimator(EstimatorKind::iptw, outcome),
          stock_estimator(EstimatorKind::tmle, outcome)};
}

std::vector<ScenarioEstimator> scenario_estimators_misspecified() {
  OutcomeModelSpec outcome;
  outcome.bounds = BoundsPolicy::empirical();
  const auto wrong = misspecify(outcome);
  return {stock_estimator(EstimatorKind::unadjusted, wrong),
          stock_estimator(EstimatorKind::gcomp, wrong),
          stock_estimator(EstimatorKind::tmle, wrong)};
}

ScenarioResult run_scenario(const DgpConfig& cfg,
                            const std::vector<ScenarioEstimator>& estimators,
                            int n_replicates, const BootstrapConfig& bootstrap,
                            int threads) {
  if (n_replicates < 2) throw std::invalid_argument("need at least 2 replicates");
  const auto targets = scenario_targets();
  const auto means = true_means(cfg);
  std::array<double, 3> truths;
  for (int k = 0; k < 3; ++k) truths[k] = means[k + 1] - means[0];

  struct Cell {
    bool ok = false;
    double point = 0.0, se = 0.0, lower = 0.0, upper = 0.0;
    int discards = 0;
  };
  // replicate x estimator x contrast
  std::vector<std::vector<std::array<Cell, 3>>> grid(
      n_replicates, std::vector<std::array<Cell, 3>>(estimators.size()));

  auto run_range = [&](int lo, int hi) {
    for (int r = lo; r < hi; ++r) {
      DgpConfig c = cfg;
      c.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(r));
      const Dataset data = generate_dataset(c);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        BootstrapConfig bc = bootstrap;
        bc.seed = mix_seed(c.seed, 0xB007 + e);
        bc.threads = 1;
        try {
          const auto intervals =
              cluster_bootstrap(data, estimators[e].closure, targets.size(), bc);
          for (int k = 0; k < 3; ++k) {
            const auto& iv = intervals[k];
            auto& cell = grid[r][e][k];
            cell.discards = iv.n_discarded;
            if (iv.valid && std::isfinite(iv.point)) {
              cell.ok = true;
              cell.point = iv.point;
              cell.se = iv.se;
              cell.lower = iv.lower;
              cell.upper = iv.upper;
            }
          }
        } catch (const error&) {
          // whole estimator failed on this replicate; cells stay not-ok
        }
      }
    }
  };

  const int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    run_range(0, n_replicates);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_replicates + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
      const int lo = t * chunk;
      const int hi = std::min(n_replicates, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  ScenarioResult result;
  result.n_studies = cfg.n_studies;
  result.n_replicates = n_replicates;
  result.seed = cfg.seed;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    for (int k = 0; k < 3; ++k) {
      ContrastMetrics m;
      m.estimator = estimators[e].name;
      m.contrast = "M" + std::to_string(k + 2) + "-M1";
      m.truth = truths[k];
      double sum = 0.0, sum_se = 0.0;
      long covered = 0;
      std::vector<double> points;
      for (int r = 0; r < n_replicates; ++r) {
        const auto& cell = grid[r][e][k];
        m.boot_discards += cell.discards;
        if (!cell.ok) {
          ++m.n_failed;
          continue;
        }
        points.push_back(cell.point);
        sum += cell.point;
        sum_se += cell.se;
        if (cell.lower <= m.truth && m.truth <= cell.upper) ++covered;
      }
      m.n_ok = static_cast<int>(points.size());
      if (m.n_ok > 0) {
        const double mean = sum / m.n_ok;
        m.pct_bias = 100.0 * (mean - m.truth) / m.truth;
        double ss = 0.0;
        bool constant = true;
        for (double v : points) {
          ss += (v - mean) * (v - mean);
          constant = constant && v == points.front();
        }
        m.se_mc = (m.n_ok > 1 && !constant) ? std::sqrt(ss / (m.n_ok - 1)) : 0.0;
        m.se_bs = sum_se / m.n_ok;
        m.coverage = static_cast<double>(covered) / m.n_ok;
      }
      result.rows.push_back(std::move(m));
    }
  }
  return result;
}

void write_scenario_csv(const std::vector<std::pair<std::string, ScenarioResult>>& panels,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path);
  out << "panel,estimator,contrast,n_studies,truth,pct_bias,se_mc,se_bs,coverage_pct,"
         "n_ok,n_failed,boot_discards\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (const auto& [panel, res] : panels) {
    for (const auto& m : res.rows) {
      out << panel << ',' << m.estimator << ',' << m.contrast << ',' << res.n_studies
          << ',' << fmt(m.truth) << ',' << fmt(m.pct_bias) << ',' << fmt(m.se_mc) << ','
          << fmt(m.se_bs) << ',' << fmt(100.0 * m.coverage) << ',' << m.n_ok << ','
          << m.n_failed << ',' << m.boot_discards << '\n';
    }
  }
}

void write_scenario_metadata(const std::vector<std::pair<std::string, ScenarioResult>>& panels,
                             const BootstrapConfig& bootstrap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path);
  out << "bootstrap_replicates: " << bootstrap.replicates << '\n';
  out << "ci: " << (bootstrap.ci == CiKind::percentile ? "percentile" : "normal") << '\n';
  out << "level: " << bootstrap.level << '\n';
  for (const auto& [panel, res] : panels) {
    out << "panel: " << panel << "\n  n_studies: " << res.n_studies
        << "\n  n_replicates: " << res.n_replicates << "\n  seed: " << res.seed << '\n';
    long discards = 0;
    int failures = 0;
    for (const auto& m : res.rows) {
      discards += m.boot_discards;
      failures += m.n_failed;
    }
    out << "  replicate_failures: " << failures
        << "\n  bootstrap_discards_total: " << discards << '\n';
  }
}

}  // namespace nma
