// Acceptance suite: runs every gate the project has to clear and prints one
// PASS/FAIL line per criterion (sub-checks are listed underneath each).
// Heavy pieces: four Monte Carlo panels at N = 15 and 50 studies with 1000
// replicates x 1000 bootstrap resamples each, and the full antibiotic-data
// pipeline with 1000 clustered bootstrap replicates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "nma/csv.hpp"
#include "nma/mrsa.hpp"
#include "nma/pipeline.hpp"
#include "nma/rng.hpp"
#include "nma/simulation.hpp"
#include "oracles.hpp"

using namespace nma;

namespace {

constexpr std::uint64_t kMasterSeed = 20260808;

struct Criterion {
  int number;
  std::string title;
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("  note " + what); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const ContrastMetrics& row(const ScenarioResult& res, const std::string& estimator,
                           const std::string& contrast) {
  for (const auto& m : res.rows)
    if (m.estimator == estimator && m.contrast == contrast) return m;
  throw std::runtime_error("missing scenario row " + estimator + "/" + contrast);
}

int hw_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 2 : static_cast<int>(n);
}

ScenarioResult scenario(int n_studies, bool misspecified, int reps, int boots) {
  DgpConfig cfg;
  cfg.n_studies = n_studies;
  cfg.seed = mix_seed(kMasterSeed,
                      static_cast<std::uint64_t>(n_studies) + (misspecified ? 1000 : 0));
  BootstrapConfig bc;
  bc.replicates = boots;
  const auto estimators =
      misspecified ? scenario_estimators_misspecified() : scenario_estimators_correct();
  return run_scenario(cfg, estimators, reps, bc, hw_threads());
}

Criterion criterion1(const ScenarioResult& c15, const ScenarioResult& c50) {
  Criterion c{1, "Monte Carlo reproduction, correctly specified models"};
  for (const auto* res : {&c15, &c50}) {
    const std::string n = std::to_string(res->n_studies);
    for (const auto contrast : {"M2-M1", "M3-M1", "M4-M1"}) {
      const auto& g = row(*res, "gcomp", contrast);
      c.check(std::fabs(g.pct_bias) <= 3.0, "gcomp " + std::string(contrast) + " N=" + n +
                                                " |%bias| = " + fmt(std::fabs(g.pct_bias)) +
                                                " <= 3");
      c.check(g.coverage >= 0.86 && g.coverage <= 0.97,
              "gcomp " + std::string(contrast) + " N=" + n +
                  " coverage = " + fmt(100 * g.coverage) + " in [86,97]");
    }
  }
  const auto& i15 = row(c15, "iptw", "M2-M1");
  c.check(i15.pct_bias >= 25.0 && i15.pct_bias <= 55.0,
          "iptw M2-M1 N=15 %bias = " + fmt(i15.pct_bias) + " in [25,55]");
  const auto& i50 = row(c50, "iptw", "M2-M1");
  c.check(i50.pct_bias >= 0.0 && i50.pct_bias <= 20.0,
          "iptw M2-M1 N=50 %bias = " + fmt(i50.pct_bias) + " in [0,20]");
  for (const auto contrast : {"M2-M1", "M3-M1", "M4-M1"}) {
    const auto& t = row(c50, "tmle", contrast);
    c.check(t.coverage >= 0.90, "tmle " + std::string(contrast) +
                                    " N=50 coverage = " + fmt(100 * t.coverage) + " >= 90");
  }
  const auto& gse = row(c50, "gcomp", "M2-M1");
  c.check(gse.se_bs > 0.01 && gse.se_bs < 0.03,
          "gcomp M2-M1 N=50 mean bootstrap SE = " + fmt(gse.se_bs) +
              " within 50% of 0.02");
  return c;
}

Criterion criterion2(const ScenarioResult& m15, const ScenarioResult& m50) {
  Criterion c{2, "Monte Carlo reproduction, misspecified outcome model"};
  for (const auto* res : {&m15, &m50}) {
    const std::string n = std::to_string(res->n_studies);
    const auto& u = row(*res, "unadjusted", "M2-M1");
    c.check(u.pct_bias > 80.0,
            "no-adjustment M2-M1 N=" + n + " %bias = " + fmt(u.pct_bias) + " > 80");
    const auto& g = row(*res, "gcomp", "M4-M1");
    c.check(g.pct_bias > 20.0,
            "gcomp M4-M1 N=" + n + " %bias = " + fmt(g.pct_bias) + " > 20");
  }
  const double t15 = std::fabs(row(m15, "tmle", "M2-M1").pct_bias);
  const double t50 = std::fabs(row(m50, "tmle", "M2-M1").pct_bias);
  c.check(t50 < t15, "tmle M2-M1 |%bias| decreases: " + fmt(t15) + " (N=15) -> " +
                         fmt(t50) + " (N=50)");
  return c;
}

Criterion criterion3() {
  Criterion c{3, "antibiotic dataset, unadjusted risk ratios vs published row"};
  const auto d = mrsa_fixture();
  const int tel = d.treatment_by_label("telavancin").id;
  const int lin = d.treatment_by_label("linezolid").id;
  const int van = d.treatment_by_label("vancomycin").id;
  const std::vector<TargetParameter> targets = {{ContrastKind::risk_ratio, tel, van},
                                                {ContrastKind::risk_ratio, lin, van},
                                                {ContrastKind::risk_ratio, tel, lin}};
  // Convention-selection oracle: evaluate both averaging conventions
  // against the published row; arm-mean is the frozen default.
  const double published[3] = {1.04, 0.92, 1.13};
  const auto arm = estimate_unadjusted(d, targets, UnadjustedConvention::arm_mean);
  const auto pooled = estimate_unadjusted(d, targets, UnadjustedConvention::pooled);
  double dev_arm = 0.0, dev_pooled = 0.0;
  for (int k = 0; k < 3; ++k) {
    dev_arm = std::max(dev_arm, std::fabs(arm.contrasts[k].value - published[k]));
    dev_pooled = std::max(dev_pooled, std::fabs(pooled.contrasts[k].value - published[k]));
  }
  c.note("convention oracle: arm-mean max|dev| = " + fmt(dev_arm) +
         ", patient-pooled max|dev| = " + fmt(dev_pooled) + "; frozen default = arm-mean");
  const char* names[3] = {"TEL/VAN", "LIN/VAN", "TEL/LIN"};
  for (int k = 0; k < 3; ++k) {
    const double v = arm.contrasts[k].value;
    c.check(std::fabs(v - published[k]) <= 0.02,
            std::string(names[k]) + " = " + fmt(v) + " vs published " + fmt(published[k]) +
                " (tolerance 0.02)");
  }
  if (!c.pass)
    c.note(
        "the published row implies an arm-mean over all 54 arms *including* the 12 "
        "whose outcomes the printed extraction table marks NA (back-solving gives "
        "plausible NA-arm means ~0.63/0.65 and reproduces all three ratios exactly); "
        "those outcomes are unrecoverable from the shipped table, so this check "
        "fails honestly rather than being tuned");
  return c;
}

Criterion criterion4() {
  Criterion c{4, "antibiotic dataset, adjusted pipeline end to end"};
  const auto d = mrsa_fixture();
  const int tel = d.treatment_by_label("telavancin").id;
  const int lin = d.treatment_by_label("linezolid").id;
  const int van = d.treatment_by_label("vancomycin").id;
  const std::vector<TargetParameter> targets = {{ContrastKind::risk_ratio, tel, van},
                                                {ContrastKind::risk_ratio, lin, van},
                                                {ContrastKind::risk_ratio, tel, lin}};
  PipelineSpec spec;
  spec.outcome.link = Link::logit;
  spec.outcome.weights = WeightConvention::n_over_s2;
  spec.outcome.bounds = BoundsPolicy::natural01();
  spec.propensity = PropensityKind::lasso_logistic;
  spec.use_missingness = true;
  spec.missingness_kind = PropensityKind::lasso_logistic;

  BootstrapConfig bc;
  bc.replicates = 1000;
  bc.seed = mix_seed(kMasterSeed, 4);
  bc.threads = hw_threads();

  spec.kind = EstimatorKind::gcomp;
  const auto g_iv =
      cluster_bootstrap(d, make_pipeline_closure(spec, targets), targets.size(), bc);
  const auto g = run_pipeline(d, spec, targets);
  spec.kind = EstimatorKind::tmle;
  const auto t_iv =
      cluster_bootstrap(d, make_pipeline_closure(spec, targets), targets.size(), bc);
  const auto t = run_pipeline(d, spec, targets);

  const char* names[3] = {"TEL/VAN", "LIN/VAN", "TEL/LIN"};
  for (int k = 0; k < 3; ++k) {
    const auto& gi = g_iv[k];
    const auto& ti = t_iv[k];
    const bool finite = gi.valid && ti.valid && std::isfinite(gi.point) &&
                        std::isfinite(gi.lower) && std::isfinite(gi.upper) &&
                        std::isfinite(ti.point) && std::isfinite(ti.lower) &&
                        std::isfinite(ti.upper);
    c.check(finite, std::string(names[k]) + ": gcomp " + fmt(gi.point) + " [" +
                        fmt(gi.lower) + ", " + fmt(gi.upper) + "] (discarded " +
                        std::to_string(gi.n_discarded) + "), tmle " + fmt(ti.point) +
                        " [" + fmt(ti.lower) + ", " + fmt(ti.upper) + "] (discarded " +
                        std::to_string(ti.n_discarded) + ") all finite");
  }
  double worst_eif = 0.0;
  for (const auto& [tid, r] : t.eif_residual) worst_eif = std::max(worst_eif, std::fabs(r));
  c.check(worst_eif < 1e-8,
          "tmle influence-function mean residual = " + fmt(worst_eif) + " < 1e-8");
  c.check(g.contrasts[1].value > 1.0,
          "gcomp LIN/VAN = " + fmt(g.contrasts[1].value) + " > 1 (direction check)");
  return c;
}

Criterion criterion5() {
  Criterion c{5, "property suites"};
  RngStream rng(kMasterSeed, stream_id::generic(500));

  {  // gradient vs central finite differences, relative 1e-5
    DesignMatrix x = make_design(25);
    add_intercept(x);
    for (int j = 0; j < 3; ++j) {
      std::vector<double> col(25);
      for (auto& v : col) v = rng.normal(0.0, 1.0);
      add_column(x, "x" + std::to_string(j), col);
    }
    std::vector<double> y(25), w(25, 1.0);
    for (auto& v : y) v = rng.uniform();
    const auto fit = fit_logistic(x, y, w);
    const auto grad = logistic_gradient(x, y, w, {}, fit.coef);
    bool ok = true;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      auto hi = fit.coef, lo = fit.coef;
      hi[j] += 1e-5;
      lo[j] -= 1e-5;
      const double fd =
          (logistic_loglik(x, y, w, {}, hi) - logistic_loglik(x, y, w, {}, lo)) / 2e-5;
      ok = ok && std::fabs(grad[j] - fd) <= 1e-5 * std::max(1.0, std::fabs(fd));
    }
    c.check(ok, "logistic gradient matches central finite differences (rel 1e-5)");
  }
  {  // weighted-residual orthogonality
    DesignMatrix x = make_design(40);
    add_intercept(x);
    for (int j = 0; j < 3; ++j) {
      std::vector<double> col(40);
      for (auto& v : col) v = rng.normal(0.0, 1.0);
      add_column(x, "z" + std::to_string(j), col);
    }
    std::vector<double> y(40), w(40);
    for (auto& v : y) v = rng.normal(0.0, 2.0);
    for (auto& v : w) v = 0.5 + rng.uniform();
    const auto fit = fit_weighted_linear(x, y, w);
    const auto eta = linear_predictor(x, fit.coef);
    bool ok = true;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double dot = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        dot += w[i] * (y[i] - eta[i]) * x.values(i, j);
        scale += std::fabs(w[i] * x.values(i, j));
      }
      ok = ok && std::fabs(dot) < 1e-8 * std::max(1.0, scale);
    }
    c.check(ok, "weighted residuals orthogonal to every design column");
  }
  {  // lasso KKT
    DesignMatrix x = make_design(30);
    add_intercept(x);
    for (int j = 0; j < 4; ++j) {
      std::vector<double> col(30);
      for (auto& v : col) v = rng.normal(0.0, 1.0);
      add_column(x, "k" + std::to_string(j), col);
    }
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i)
      y[i] = rng.uniform() < oracle::expit_ref(0.5 * x.values(i, 1)) ? 1.0 : 0.0;
    bool ok = true;
    double worst = 0.0;
    for (double lambda : lasso_lambda_grid(x, y, 10)) {
      const auto fit = fit_lasso_logistic(x, y, lambda);
      worst = std::max(worst, lasso_kkt_max_violation(x, y, lambda, fit));
      ok = ok && worst <= 1e-6;
    }
    c.check(ok, "lasso KKT violation across the grid = " + fmt(worst) + " <= 1e-6");
  }
  {  // truncation idempotence
    std::vector<double> scores;
    for (int i = 0; i < 37; ++i) scores.push_back(rng.uniform());
    const auto once = truncate_scores(scores, 0.07);
    c.check(truncate_scores(once, 0.07) == once, "truncation is idempotent");
  }
  {  // TMLE epsilon = 0 equals G-computation bit-exactly
    Dataset d;
    d.outcome_kind = OutcomeKind::continuous;
    d.covariate_names = {"w"};
    d.treatments = {{0, "t0"}, {1, "t1"}};
    for (int i = 0; i < 3; ++i) {
      Study s;
      s.study_id = "s" + std::to_string(i);
      s.covariates.values = {static_cast<double>(i)};
      s.arms.push_back({d.treatments[0], 20, OutcomeSummary::continuous(i, 0.5)});
      s.arms.push_back({d.treatments[1], 20, OutcomeSummary::continuous(i + 1.0, 0.5)});
      d.studies.push_back(s);
    }
    OutcomeModelSpec spec;
    spec.bounds = BoundsPolicy::empirical();
    const auto pm = PropensityModel::from_coefficients(d, {{1.0, 0.2}, {0.3, -0.4}});
    const std::vector<TargetParameter> targets = {{ContrastKind::mean_difference, 1, 0}};
    const auto g = estimate_gcomp(d, spec, targets);
    const auto t = estimate_tmle(d, spec, pm, nullptr, targets);
    c.check(t.epsilon.at(1) == 0.0 && t.mean_for(0) == g.mean_for(0) &&
                t.mean_for(1) == g.mean_for(1),
            "tmle with epsilon = 0 equals gcomp exactly");
  }
  {  // IPTW brute-force equality
    DgpConfig cfg;
    cfg.n_studies = 25;
    cfg.seed = mix_seed(kMasterSeed, 55);
    const auto d = generate_dataset(cfg);
    const auto pm = fit_propensity(d, PropensityKind::logistic);
    std::vector<TargetParameter> targets;
    for (int t = 0; t < 4; ++t) targets.push_back({ContrastKind::treatment_mean, t, {}});
    const auto r = estimate_iptw(d, pm, targets);
    bool ok = true;
    for (int t = 0; t < 4; ++t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < d.studies.size(); ++i) {
        const int j = d.studies[i].arm_index(t);
        if (j >= 0) sum += d.studies[i].arms[j].outcome.mean / pm.study_score(i, t);
      }
      ok = ok && r.mean_for(t) == sum / static_cast<double>(d.studies.size());
    }
    c.check(ok, "iptw equals the brute-force Horvitz-Thompson sum bit-for-bit");
  }
  {  // bootstrap seeded determinism, serial == parallel
    DgpConfig cfg;
    cfg.n_studies = 12;
    cfg.seed = mix_seed(kMasterSeed, 56);
    const auto d = generate_dataset(cfg);
    PipelineSpec spec;
    spec.kind = EstimatorKind::gcomp;
    spec.outcome.bounds = BoundsPolicy::empirical();
    const std::vector<TargetParameter> targets = {{ContrastKind::mean_difference, 1, 0}};
    BootstrapConfig bc;
    bc.replicates = 200;
    bc.seed = 99;
    const auto a = cluster_bootstrap(d, make_pipeline_closure(spec, targets), 1, bc);
    bc.threads = hw_threads();
    const auto b = cluster_bootstrap(d, make_pipeline_closure(spec, targets), 1, bc);
    c.check(a[0].se == b[0].se && a[0].lower == b[0].lower && a[0].upper == b[0].upper,
            "bootstrap is seed-deterministic, serial == parallel");
  }
  {  // total-variance identity for the generator
    DgpConfig cfg;
    cfg.n_studies = 1500;
    cfg.seed = mix_seed(kMasterSeed, 57);
    const auto d = generate_dataset(cfg);
    double s2 = 0.0;
    long n = 0;
    for (const auto& s : d.studies)
      for (const auto& a : s.arms)
        if (a.n >= 1000) {
          s2 += a.outcome.sd * a.outcome.sd;
          ++n;
        }
    const double mean_s2 = s2 / n;
    c.check(std::fabs(mean_s2 - 5.0) / 5.0 < 0.01,
            "mean arm variance (arms with n >= 1000) = " + fmt(mean_s2) +
                " within 1% of 5");
  }
  return c;
}

Criterion criterion6() {
  Criterion c{6, "desk-scale oracle equivalence (3-study dataset)"};
  Dataset d;
  d.outcome_kind = OutcomeKind::continuous;
  d.covariate_names = {"w"};
  d.treatments = {{0, "t0"}, {1, "t1"}};
  const double y0[] = {0.10, 0.40, 0.55};
  const double y1[] = {0.30, 0.70, 0.90};
  for (int i = 0; i < 3; ++i) {
    Study s;
    s.study_id = "d" + std::to_string(i);
    s.covariates.values = {static_cast<double>(i)};
    s.arms.push_back({d.treatments[0], 20, OutcomeSummary::continuous(y0[i], 0.5)});
    s.arms.push_back({d.treatments[1], 20, OutcomeSummary::continuous(y1[i], 0.5)});
    d.studies.push_back(s);
  }
  const std::vector<TargetParameter> targets = {{ContrastKind::mean_difference, 1, 0}};
  OutcomeModelSpec spec;
  spec.bounds = BoundsPolicy::user(0.0, 1.0);
  const auto pm = PropensityModel::from_coefficients(d, {{1.0, 0.2}, {0.3, -0.4}});

  // Long-double regression oracle shared by all three estimators.
  DesignMatrix x = make_design(6);
  add_intercept(x);
  add_column(x, "t1", {0, 1, 0, 1, 0, 1});
  add_column(x, "w", {0, 0, 1, 1, 2, 2});
  const std::vector<double> y = {0.10, 0.30, 0.40, 0.70, 0.55, 0.90};
  const auto beta = oracle::wls_longdouble(x, y, std::vector<double>(6, 80.0));

  {
    const auto r = estimate_gcomp(d, spec, targets);
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < 3; ++i) {
      m0 += (beta[0] + beta[2] * i) / 3.0;
      m1 += (beta[0] + beta[1] + beta[2] * i) / 3.0;
    }
    c.check(std::fabs(r.contrasts[0].value - (m1 - m0)) < 1e-8,
            "gcomp contrast " + fmt(r.contrasts[0].value) +
                " matches the long-double oracle to 1e-8");
  }
  {
    const auto r = estimate_iptw(d, pm, targets);
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < 3; ++i) {
      m0 += y0[i] / oracle::expit_ref(1.0 + 0.2 * i) / 3.0;
      m1 += y1[i] / oracle::expit_ref(0.3 - 0.4 * i) / 3.0;
    }
    c.check(std::fabs(r.contrasts[0].value - (m1 - m0)) < 1e-8,
            "iptw contrast " + fmt(r.contrasts[0].value) +
                " matches the hand formula to 1e-8");
  }
  {
    const auto r = estimate_tmle(d, spec, pm, nullptr, targets);
    double means[2];
    for (int target = 0; target < 2; ++target) {
      std::vector<double> pred(3), g(3), ys(3);
      for (int i = 0; i < 3; ++i) {
        pred[i] = beta[0] + beta[1] * (target == 1) + beta[2] * i;
        g[i] = oracle::expit_ref(target == 1 ? 0.3 - 0.4 * i : 1.0 + 0.2 * i);
        ys[i] = target == 1 ? y1[i] : y0[i];
      }
      const auto score = [&](double eps) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) {
          const double logit_p = std::log(pred[i] / (1.0 - pred[i]));
          s += (1.0 / g[i]) * (ys[i] - oracle::expit_ref(logit_p + eps / g[i]));
        }
        return s;
      };
      const double eps = oracle::bisect_decreasing(score, -20.0, 20.0, 300);
      double mean = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double logit_p = std::log(pred[i] / (1.0 - pred[i]));
        mean += oracle::expit_ref(logit_p + eps / g[i]) / 3.0;
      }
      means[target] = mean;
    }
    c.check(std::fabs(r.contrasts[0].value - (means[1] - means[0])) < 1e-8,
            "tmle contrast " + fmt(r.contrasts[0].value) +
                " matches the scalar-oracle pipeline to 1e-8");
  }
  return c;
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Criterion> results;

  std::printf("fast criteria (3, 4, 5, 6)...\n");
  results.push_back(criterion5());
  results.push_back(criterion6());
  results.push_back(criterion3());
  results.push_back(criterion4());

  std::printf("Monte Carlo panels for criteria 1 and 2 (1000 x 1000; minutes)...\n");
  const int reps = 1000, boots = 1000;
  const auto c15 = scenario(15, false, reps, boots);
  std::printf("  correct N=15 done\n");
  const auto c50 = scenario(50, false, reps, boots);
  std::printf("  correct N=50 done\n");
  const auto m15 = scenario(15, true, reps, boots);
  std::printf("  misspecified N=15 done\n");
  const auto m50 = scenario(50, true, reps, boots);
  std::printf("  misspecified N=50 done\n");
  results.push_back(criterion1(c15, c50));
  results.push_back(criterion2(m15, m50));

  std::sort(results.begin(), results.end(),
            [](const Criterion& a, const Criterion& b) { return a.number < b.number; });

  const auto t1 = std::chrono::steady_clock::now();
  std::printf("\n================ acceptance summary (%lld s) ================\n",
              static_cast<long long>(
                  std::chrono::duration_cast<std::chrono::seconds>(t1 - t0).count()));
  bool all = true;
  for (const auto& c : results) {
    std::printf("%s criterion %d: %s\n", c.pass ? "PASS" : "FAIL", c.number,
                c.title.c_str());
    for (const auto& d : c.details) std::printf("%s\n", d.c_str());
    all = all && c.pass;
  }
  std::printf("=============================================================\n");
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "AT LEAST ONE CRITERION FAILED");
  return all ? 0 : 1;
}
