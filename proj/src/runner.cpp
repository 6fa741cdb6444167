#include "nma/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "nma/csv.hpp"
#include "nma/errors.hpp"
#include "nma/mrsa.hpp"
#include "nma/rng.hpp"

namespace fs = std::filesystem;

namespace nma {

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Link parse_link(const std::string& s) {
  if (s == "identity") return Link::identity;
  if (s == "logit") return Link::logit;
  if (s == "log") return Link::log;
  throw error("unknown link '" + s + "' (identity|logit|log)");
}

WeightConvention parse_weights(const std::string& s) {
  if (s == "n_over_s2") return WeightConvention::n_over_s2;
  if (s == "inv_s2") return WeightConvention::inv_s2;
  if (s == "n") return WeightConvention::n;
  if (s == "none") return WeightConvention::unweighted;
  throw error("unknown weight convention '" + s + "' (n_over_s2|inv_s2|n|none)");
}

BoundsPolicy parse_bounds(const std::string& s) {
  if (s == "natural") return BoundsPolicy::natural01();
  if (s == "empirical") return BoundsPolicy::empirical();
  const auto parts = split(s, ',');
  if (parts.size() == 2) {
    try {
      return BoundsPolicy::user(std::stod(parts[0]), std::stod(parts[1]));
    } catch (const std::exception&) {
    }
  }
  throw error("bounds must be 'natural', 'empirical' or 'L,U'");
}

PropensityKind parse_propensity(const std::string& s) {
  if (s == "logistic") return PropensityKind::logistic;
  if (s == "lasso") return PropensityKind::lasso_logistic;
  throw error("unknown propensity kind '" + s + "' (logistic|lasso)");
}

// Tracks files written this run so a failure can clean them up.
struct OutputSet {
  fs::path dir;
  std::vector<fs::path> written;

  explicit OutputSet(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }
  std::ofstream open(const std::string& name) {
    const fs::path p = dir / name;
    std::ofstream f(p);
    if (!f) throw error("cannot write " + p.string());
    written.push_back(p);
    return f;
  }
  std::string path(const std::string& name) {
    const fs::path p = dir / name;
    written.push_back(p);
    return p.string();
  }
  void remove_all_written() {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

struct ResultRow {
  std::string estimator;
  std::string target;
  IntervalEstimate interval;
};

void write_estimates_csv(std::ofstream f, const std::vector<ResultRow>& rows) {
  f << "estimator,target,point,se,ci_low,ci_high,n_discarded\n";
  for (const auto& r : rows) {
    f << r.estimator << ',' << r.target << ',' << fmt17(r.interval.point) << ','
      << fmt17(r.interval.se) << ',' << fmt17(r.interval.lower) << ','
      << fmt17(r.interval.upper) << ',' << r.interval.n_discarded << '\n';
  }
}

void write_forest(std::ofstream f, const std::vector<ResultRow>& rows) {
  // Plain whitespace-delimited plot data: label point lower upper.
  for (const auto& r : rows) {
    std::string label = r.estimator + ":" + r.target;
    for (char& c : label)
      if (c == ' ' || c == '\t') c = '_';
    f << label << ' ' << fmt17(r.interval.point) << ' ' << fmt17(r.interval.lower)
      << ' ' << fmt17(r.interval.upper) << '\n';
  }
}

void write_assumptions(std::ofstream f, const Dataset& d, const PositivityReport& pos) {
  std::size_t missing_arms = 0;
  for (const auto& s : d.studies)
    for (const auto& a : s.arms)
      if (a.outcome.missing) ++missing_arms;
  double min_score = 1.0;
  for (const auto& r : pos.rows) min_score = std::min(min_score, r.min_score);

  f << "# Causal assumption checklist\n\n";
  f << "Estimates below are counterfactual treatment-specific means over the\n"
       "combined population targeted by the included studies. They carry a\n"
       "causal interpretation only under the assumptions listed here; each\n"
       "one must be argued from subject-matter knowledge, not from the data\n"
       "alone.\n\n";
  f << "Dataset: " << d.studies.size() << " studies, " << d.n_arms() << " arms, "
    << d.treatments.size() << " treatments, " << missing_arms
    << " arms with missing outcomes.\n";
  f << "Study-level covariates: ";
  for (std::size_t c = 0; c < d.covariate_names.size(); ++c)
    f << (c ? ", " : "") << d.covariate_names[c];
  f << "\n\n";
  f << "- [ ] **No interference.** The treatment evaluated in one study (or\n"
       "  arm) does not affect outcomes in another. Justify: ____\n";
  f << "- [ ] **Unconfoundedness.** The covariates listed above capture every\n"
       "  study-level factor that influenced both which treatments a study\n"
       "  evaluated and its outcome level. Justify: ____\n";
  f << "- [ ] **Consistency.** Each treatment label means the same\n"
       "  intervention (dose, duration, outcome definition) in every study.\n"
       "  Justify: ____\n";
  f << "- [ ] **Positivity.** Every study had a positive probability of\n"
       "  evaluating each treatment of interest. Estimated scores below "
    << (min_score < 0.10 ? "DO" : "do not") << "\n  fall under 0.10 (minimum "
    << min_score << "); see positivity.txt. Justify: ____\n";
}

int run_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Dataset d;
  try {
    d = load_input(cfg.input);
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  OutputSet outputs(cfg.out_dir);
  try {
    const auto targets = parse_contrasts(d, cfg.contrasts);

    // Shared model options.
    OutcomeModelSpec outcome;
    outcome.link = cfg.link ? parse_link(*cfg.link)
                            : (d.outcome_kind == OutcomeKind::binary ? Link::logit
                                                                     : Link::identity);
    outcome.weights = cfg.weights ? parse_weights(*cfg.weights)
                                  : WeightConvention::inv_s2;
    outcome.bounds = cfg.bounds ? parse_bounds(*cfg.bounds)
                                : (d.outcome_kind == OutcomeKind::binary
                                       ? BoundsPolicy::natural01()
                                       : BoundsPolicy::empirical());

    PipelineSpec base;
    base.outcome = outcome;
    base.propensity = parse_propensity(cfg.propensity);
    if (cfg.truncate_pct) {
      if (!(*cfg.truncate_pct > 0.0 && *cfg.truncate_pct < 50.0))
        throw error("--truncate-pct must lie in (0, 50)");
      base.truncation = *cfg.truncate_pct / 100.0;
    }
    bool any_missing = false;
    for (const auto& s : d.studies)
      for (const auto& a : s.arms) any_missing = any_missing || a.outcome.missing;
    if (cfg.missingness == "auto") {
      base.use_missingness = any_missing;
      base.missingness_kind = base.propensity;
    } else if (cfg.missingness != "none") {
      base.use_missingness = true;
      base.missingness_kind = parse_propensity(cfg.missingness);
    }
    base.unadjusted_convention = cfg.unadjusted_convention == "pooled"
                                     ? UnadjustedConvention::pooled
                                     : UnadjustedConvention::arm_mean;
    base.hajek = cfg.hajek;

    BootstrapConfig bc;
    bc.replicates = cfg.bootstrap_reps;
    bc.ci = cfg.ci == "normal" ? CiKind::normal : CiKind::percentile;
    bc.level = cfg.level;
    bc.threads = cfg.threads;

    std::vector<ResultRow> rows;
    for (const auto& name : cfg.estimators) {
      const auto kind = estimator_from_name(name);
      if (!kind) throw error("unknown estimator '" + name + "'");
      PipelineSpec spec = base;
      spec.kind = *kind;
      bc.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(*kind));
      const auto closure = make_pipeline_closure(spec, targets);
      const auto intervals = cluster_bootstrap(d, closure, targets.size(), bc);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        if (!intervals[k].valid)
          throw estimation_error("estimator '" + name + "' could not estimate target '" +
                                 cfg.contrasts[k] + "'");
        rows.push_back({name, cfg.contrasts[k], intervals[k]});
      }
    }

    write_estimates_csv(outputs.open("estimates.csv"), rows);
    write_forest(outputs.open("forest.dat"), rows);

    out << std::left << std::setw(12) << "estimator" << std::setw(34) << "target"
        << std::right << std::setw(9) << "point" << std::setw(9) << "se" << std::setw(9)
        << "ci_low" << std::setw(9) << "ci_high" << std::setw(7) << "disc" << '\n';
    for (const auto& r : rows) {
      out << std::left << std::setw(12) << r.estimator << std::setw(34) << r.target
          << std::right << std::fixed << std::setprecision(3) << std::setw(9)
          << r.interval.point << std::setw(9) << r.interval.se << std::setw(9)
          << r.interval.lower << std::setw(9) << r.interval.upper << std::setw(7)
          << r.interval.n_discarded << '\n';
      out.unsetf(std::ios::fixed);
    }

    // Diagnostics describe the raw support; truncation is applied only
    // inside the estimators.
    const auto pm = fit_propensity(d, base.propensity, base.lambda_policy);
    const auto pos = positivity_report(pm, d);
    outputs.open("positivity.txt") << pos.to_text();
    write_assumptions(outputs.open("assumptions.md"), d, pos);

    out << "wrote estimates.csv, forest.dat, positivity.txt, assumptions.md to "
        << cfg.out_dir << '\n';
    return kExitOk;
  } catch (const error& e) {
    outputs.remove_all_written();
    err << "error: " << e.what() << '\n';
    return kExitEstimation;
  }
}

int run_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  OutputSet outputs(cfg.out_dir);
  try {
    BootstrapConfig bc;
    bc.replicates = cfg.bootstrap_reps;
    bc.ci = cfg.ci == "normal" ? CiKind::normal : CiKind::percentile;
    bc.level = cfg.level;

    std::vector<std::pair<std::string, ScenarioResult>> panels;
    for (int n : cfg.sim_n_studies) {
      DgpConfig dgp;
      dgp.n_studies = n;
      dgp.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(n));
      if (cfg.sim_panel == "correct" || cfg.sim_panel == "both")
        panels.emplace_back("correct", run_scenario(dgp, scenario_estimators_correct(),
                                                    cfg.sim_replicates, bc, cfg.threads));
      if (cfg.sim_panel == "misspecified" || cfg.sim_panel == "both")
        panels.emplace_back("misspecified",
                            run_scenario(dgp, scenario_estimators_misspecified(),
                                         cfg.sim_replicates, bc, cfg.threads));
    }
    write_scenario_csv(panels, outputs.path("table2_repro.csv"));
    write_scenario_metadata(panels, bc, outputs.path("table2_repro_meta.txt"));
    out << "wrote table2_repro.csv and table2_repro_meta.txt to " << cfg.out_dir << '\n';
    return kExitOk;
  } catch (const error& e) {
    outputs.remove_all_written();
    err << "error: " << e.what() << '\n';
    return kExitEstimation;
  } catch (const std::exception& e) {
    outputs.remove_all_written();
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Dataset d = load_input(cfg.input);
    out << "OK: " << d.studies.size() << " studies, " << d.n_arms() << " arms, "
        << d.treatments.size() << " treatments, "
        << (d.outcome_kind == OutcomeKind::binary ? "binary" : "continuous")
        << " outcome\n";
    return kExitOk;
  } catch (const error& e) {
    err << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

Dataset load_input(const std::string& input) {
  if (input.empty()) throw error("no input dataset given");
  if (input == "mrsa" && !fs::exists("mrsa")) return mrsa_fixture();
  return ingest_csv(input);
}

std::vector<TargetParameter> parse_contrasts(const Dataset& d,
                                             const std::vector<std::string>& specs) {
  if (specs.empty()) throw error("no contrasts requested (--contrasts)");
  std::vector<TargetParameter> targets;
  for (const auto& spec : specs) {
    TargetParameter t;
    std::size_t pos;
    if ((pos = spec.find('/')) != std::string::npos) {
      t.kind = ContrastKind::risk_ratio;
      t.a = d.treatment_by_label(spec.substr(0, pos)).id;
      t.b = d.treatment_by_label(spec.substr(pos + 1)).id;
    } else if ((pos = spec.find('-')) != std::string::npos &&
               pos > 0) {  // leading '-' would be a malformed label, not a contrast
      t.kind = ContrastKind::mean_difference;
      t.a = d.treatment_by_label(spec.substr(0, pos)).id;
      t.b = d.treatment_by_label(spec.substr(pos + 1)).id;
    } else {
      t.kind = ContrastKind::treatment_mean;
      t.a = d.treatment_by_label(spec).id;
    }
    targets.push_back(t);
  }
  return targets;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  switch (cfg.mode) {
    case RunConfig::Mode::analyze:
      return run_analyze(cfg, out, err);
    case RunConfig::Mode::simulate:
      return run_simulate(cfg, out, err);
    case RunConfig::Mode::validate:
      return run_validate(cfg, out, err);
  }
  err << "error: unknown mode\n";
  return kExitUsage;
}

}  // namespace nma
