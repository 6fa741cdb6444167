#include <doctest.h>

#include <cmath>
#include <set>

#include "nma/errors.hpp"
#include "nma/inference.hpp"
#include "nma/pipeline.hpp"
#include "nma/rng.hpp"
#include "nma/simulation.hpp"

using namespace nma;

namespace {

Dataset one_arm_studies(const std::vector<double>& outcomes) {
  Dataset d;
  d.outcome_kind = OutcomeKind::continuous;
  d.covariate_names = {};
  d.treatments = {{0, "a"}};
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    Study s;
    s.study_id = "s" + std::to_string(i);
    s.arms.push_back({d.treatments[0], 50, OutcomeSummary::continuous(outcomes[i], 1.0)});
    d.studies.push_back(s);
  }
  return d;
}

EstimatorClosure mean_closure() {
  return [](const Dataset& d) -> std::vector<std::optional<double>> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : d.studies)
      for (const auto& a : s.arms) {
        sum += a.outcome.mean;
        ++n;
      }
    return {sum / static_cast<double>(n)};
  };
}

}  // namespace

TEST_CASE("single-study dataset: every resample identical, SE zero") {
  const auto d = one_arm_studies({1.7});
  BootstrapConfig cfg;
  cfg.replicates = 50;
  const auto iv = cluster_bootstrap(d, mean_closure(), 1, cfg);
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].valid);
  CHECK(iv[0].se == 0.0);
  CHECK(iv[0].lower == iv[0].upper);
  CHECK(iv[0].point == doctest::Approx(1.7));
  CHECK(iv[0].n_discarded == 0);
}

TEST_CASE("same seed gives bit-identical intervals; different seed differs") {
  RngStream rng(31, stream_id::generic(0));
  std::vector<double> ys(20);
  for (auto& y : ys) y = rng.normal(0.0, 1.0);
  const auto d = one_arm_studies(ys);
  BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.seed = 99;
  const auto a = cluster_bootstrap(d, mean_closure(), 1, cfg);
  const auto b = cluster_bootstrap(d, mean_closure(), 1, cfg);
  CHECK(a[0].se == b[0].se);
  CHECK(a[0].lower == b[0].lower);
  CHECK(a[0].upper == b[0].upper);
  cfg.seed = 100;
  const auto c = cluster_bootstrap(d, mean_closure(), 1, cfg);
  CHECK(a[0].se != c[0].se);
}

TEST_CASE("parallel execution reproduces the serial result exactly") {
  RngStream rng(32, stream_id::generic(0));
  std::vector<double> ys(30);
  for (auto& y : ys) y = rng.normal(2.0, 1.5);
  const auto d = one_arm_studies(ys);
  BootstrapConfig serial;
  serial.replicates = 300;
  serial.seed = 7;
  serial.threads = 1;
  BootstrapConfig parallel = serial;
  parallel.threads = 4;
  const auto a = cluster_bootstrap(d, mean_closure(), 1, serial);
  const auto b = cluster_bootstrap(d, mean_closure(), 1, parallel);
  CHECK(a[0].se == b[0].se);
  CHECK(a[0].lower == b[0].lower);
  CHECK(a[0].upper == b[0].upper);
  CHECK(a[0].n_discarded == b[0].n_discarded);
}

TEST_CASE("bootstrap SE tracks the analytic SE of a mean of arm values") {
  RngStream rng(33, stream_id::generic(0));
  std::vector<double> ys(200);
  for (auto& y : ys) y = 0.3 + 0.1 * rng.normal(0.0, 1.0);
  const auto d = one_arm_studies(ys);
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= ys.size();
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  const double analytic = std::sqrt(ss / (ys.size() - 1)) / std::sqrt(ys.size());
  BootstrapConfig cfg;
  cfg.replicates = 800;
  cfg.seed = 13;
  const auto iv = cluster_bootstrap(d, mean_closure(), 1, cfg);
  CHECK(std::fabs(iv[0].se - analytic) / analytic < 0.15);
}

TEST_CASE("resampling keeps whole studies together") {
  DgpConfig dcfg;
  dcfg.n_studies = 13;
  dcfg.seed = 5;
  const auto d = generate_dataset(dcfg);
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const auto idx = bootstrap_indices(d.studies.size(), 42, rep);
    REQUIRE(idx.size() == d.studies.size());
    const auto res = resample_studies(d, idx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& original = d.studies[idx[k]];
      const auto& copy = res.studies[k];
      CHECK(copy.study_id == original.study_id);
      CHECK(copy.arms.size() == original.arms.size());
    }
  }
}

TEST_CASE("per-target discards are counted, other targets keep their replicates") {
  // Two targets: the mean, and a value that is only defined when study
  // "s0" is in the resample.
  const auto d = one_arm_studies({1.0, 2.0, 3.0, 4.0});
  EstimatorClosure closure = [](const Dataset& data) {
    std::vector<std::optional<double>> out(2);
    double sum = 0.0;
    bool has_s0 = false;
    for (const auto& s : data.studies) {
      sum += s.arms[0].outcome.mean;
      has_s0 = has_s0 || s.study_id == "s0";
    }
    out[0] = sum / data.studies.size();
    if (has_s0) out[1] = 1.0;
    return out;
  };
  BootstrapConfig cfg;
  cfg.replicates = 500;
  cfg.seed = 21;
  const auto iv = cluster_bootstrap(d, closure, 2, cfg);
  CHECK(iv[0].n_discarded == 0);
  // P(resample of 4 misses s0) = (3/4)^4 ~ 0.316
  CHECK(iv[1].n_discarded > 100);
  CHECK(iv[1].n_discarded < 220);
  CHECK(iv[0].n_effective == 500);
  CHECK(iv[1].n_effective + iv[1].n_discarded == 500);
}

TEST_CASE("smoke dataset with ubiquitous treatments discards nothing") {
  DgpConfig dcfg;
  dcfg.n_studies = 20;
  dcfg.seed = 9;
  auto d = generate_dataset(dcfg);
  // Collapse to two treatments present in every study to keep fits trivially
  // well-conditioned.
  d.treatments = {{0, "1"}, {1, "2"}};
  for (auto& s : d.studies) {
    s.arms[0].treatment = d.treatments[0];
    s.arms[1].treatment = d.treatments[1];
  }
  PipelineSpec spec;
  spec.kind = EstimatorKind::gcomp;
  spec.outcome.bounds = BoundsPolicy::empirical();
  const std::vector<TargetParameter> targets = {{ContrastKind::mean_difference, 1, 0}};
  BootstrapConfig cfg;
  cfg.replicates = 300;
  cfg.seed = 3;
  const auto iv =
      cluster_bootstrap(d, make_pipeline_closure(spec, targets), 1, cfg);
  CHECK(iv[0].n_discarded == 0);
  CHECK(iv[0].valid);
}

TEST_CASE("percentile and normal intervals are both ordered and centered sanely") {
  RngStream rng(34, stream_id::generic(0));
  std::vector<double> ys(40);
  for (auto& y : ys) y = rng.normal(1.0, 0.5);
  const auto d = one_arm_studies(ys);
  BootstrapConfig cfg;
  cfg.replicates = 400;
  cfg.seed = 17;
  const auto pct = cluster_bootstrap(d, mean_closure(), 1, cfg);
  cfg.ci = CiKind::normal;
  const auto nrm = cluster_bootstrap(d, mean_closure(), 1, cfg);
  for (const auto& iv : {pct[0], nrm[0]}) {
    CHECK(iv.lower <= iv.upper);
    CHECK(iv.se >= 0.0);
  }
  CHECK(nrm[0].lower == doctest::Approx(nrm[0].point - 1.959963984540054 * nrm[0].se));
}

TEST_CASE("coverage: trivial and calibrated cases") {
  std::vector<IntervalEstimate> wide(5), disjoint(4);
  for (auto& iv : wide) {
    iv.lower = -1e300;
    iv.upper = 1e300;
  }
  for (auto& iv : disjoint) {
    iv.lower = 5.0;
    iv.upper = 6.0;
  }
  CHECK(coverage(wide, 0.0) == 1.0);
  CHECK(coverage(disjoint, 0.0) == 0.0);
  CHECK_THROWS_AS(coverage({}, 0.0), inference_error);

  // Textbook calibration: 1000 normal-theory intervals for a known mean.
  RngStream rng(35, stream_id::generic(0));
  std::vector<IntervalEstimate> ivs(1000);
  const int n = 25;
  for (auto& iv : ivs) {
    double sum = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal(3.0, 2.0);
      sum += x;
      ss += x * x;
    }
    const double mean = sum / n;
    const double sd = std::sqrt((ss - n * mean * mean) / (n - 1));
    const double half = 2.0639 * sd / std::sqrt(n);  // t(24) 97.5 percentile
    iv.lower = mean - half;
    iv.upper = mean + half;
  }
  CHECK(coverage(ivs, 3.0) == doctest::Approx(0.95).epsilon(0.021));
}

TEST_CASE("bootstrap rejects nonsense configurations") {
  const auto d = one_arm_studies({1.0, 2.0});
  BootstrapConfig cfg;
  cfg.replicates = 1;
  CHECK_THROWS_AS(cluster_bootstrap(d, mean_closure(), 1, cfg), inference_error);
  cfg.replicates = 10;
  cfg.level = 1.5;
  CHECK_THROWS_AS(cluster_bootstrap(d, mean_closure(), 1, cfg), inference_error);
  CHECK_THROWS_AS(cluster_bootstrap(Dataset{}, mean_closure(), 1, BootstrapConfig{}),
                  inference_error);
}
