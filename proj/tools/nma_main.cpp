// Command-line front end. Configuration can also come from an INI-style
// file via --config (flags given on the command line win).

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nma/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Counterfactual (marginal) estimation for aggregate-data network "
      "meta-analysis: G-computation, IPTW and TMLE with clustered bootstrap "
      "inference, plus a Monte Carlo simulation harness."};
  app.set_config("--config", "", "INI config file; command-line flags override it");

  nma::RunConfig cfg;
  std::string mode = "analyze";
  std::string estimators = "unadjusted,gcomp,tmle";
  std::string contrasts;
  std::string link, weights, bounds;
  std::string sim_n = "15,50";
  double truncate_pct = -1.0;

  app.add_option("--mode", mode, "analyze | simulate | validate")
      ->check(CLI::IsMember({"analyze", "simulate", "validate"}));
  app.add_option("--input", cfg.input,
                 "arm-level CSV (or 'mrsa' for the bundled antibiotic dataset)");
  app.add_option("--out", cfg.out_dir, "output directory (default .)");
  app.add_option("--seed", cfg.seed, "RNG seed (default 1)");
  app.add_option("--threads", cfg.threads, "worker threads (default 1)");
  app.add_option("--estimators", estimators,
                 "comma list of unadjusted,gcomp,iptw,tmle,fe-log");
  app.add_option("--contrasts", contrasts,
                 "comma list: a/b = ratio, a-b = difference, a = mean");
  app.add_option("--link", link, "outcome model link: identity | logit | log");
  app.add_option("--weights", weights,
                 "outcome regression weights: n_over_s2 | inv_s2 | n | none");
  app.add_option("--bounds", bounds, "scaling bounds: natural | empirical | L,U");
  app.add_option("--propensity", cfg.propensity, "logistic | lasso");
  app.add_option("--missingness", cfg.missingness,
                 "missing-outcome model: auto | none | logistic | lasso");
  app.add_option("--truncate-pct", truncate_pct,
                 "truncate propensity scores below this percentile (percent)");
  app.add_option("--unadjusted-convention", cfg.unadjusted_convention,
                 "arm_mean | pooled");
  app.add_flag("--hajek", cfg.hajek, "normalize IPTW by the sum of weights");
  app.add_option("--bootstrap-reps", cfg.bootstrap_reps,
                 "bootstrap replicates (default 1000)");
  app.add_option("--ci", cfg.ci, "percentile | normal");
  app.add_option("--level", cfg.level, "confidence level (default 0.95)");
  app.add_option("--sim-n-studies", sim_n, "simulate: comma list of study counts");
  app.add_option("--sim-reps", cfg.sim_replicates,
                 "simulate: Monte Carlo replicates (default 1000)");
  app.add_option("--sim-panel", cfg.sim_panel, "correct | misspecified | both");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? nma::kExitOk : nma::kExitUsage;
  }

  cfg.mode = mode == "simulate"   ? nma::RunConfig::Mode::simulate
             : mode == "validate" ? nma::RunConfig::Mode::validate
                                  : nma::RunConfig::Mode::analyze;
  if (truncate_pct > 0.0) cfg.truncate_pct = truncate_pct;

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  };
  cfg.estimators = split(estimators);
  cfg.contrasts = split(contrasts);
  if (!link.empty()) cfg.link = link;
  if (!weights.empty()) cfg.weights = weights;
  if (!bounds.empty()) cfg.bounds = bounds;
  cfg.sim_n_studies.clear();
  for (const auto& tok : split(sim_n)) {
    try {
      cfg.sim_n_studies.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      std::cerr << "error: bad --sim-n-studies value '" << tok << "'\n";
      return nma::kExitUsage;
    }
  }

  if (cfg.mode != nma::RunConfig::Mode::simulate && cfg.input.empty()) {
    std::cerr << "error: --input is required for analyze/validate\n";
    return nma::kExitUsage;
  }
  if (cfg.mode == nma::RunConfig::Mode::analyze && cfg.contrasts.empty()) {
    std::cerr << "error: --contrasts is required for analyze\n";
    return nma::kExitUsage;
  }

  return nma::run(cfg, std::cout, std::cerr);
}
