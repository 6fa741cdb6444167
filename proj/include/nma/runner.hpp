#pragma once

// Front-end orchestration shared by the command-line tool and the tests:
// load a dataset, run the configured estimators with clustered bootstrap
// inference, and write the report artifacts (estimates.csv, positivity.txt,
// assumptions.md, forest.dat; simulation mode writes table2_repro.csv and
// a metadata sidecar).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nma/pipeline.hpp"
#include "nma/simulation.hpp"

namespace nma {

// Exit codes: 0 success, 1 usage, 2 data, 3 estimation/inference.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitEstimation = 3 };

struct RunConfig {
  enum class Mode { analyze, simulate, validate } mode = Mode::analyze;

  std::string input;         // CSV path, or "mrsa" for the embedded fixture
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;

  // analyze
  std::vector<std::string> estimators = {"unadjusted", "gcomp", "tmle"};
  std::vector<std::string> contrasts;             // "a/b" ratio, "a-b" difference, "a" mean
  std::optional<std::string> link;                // identity | logit | log
  std::optional<std::string> weights;             // n_over_s2 | inv_s2 | n | none
  std::optional<std::string> bounds;              // natural | empirical | "L,U"
  std::string propensity = "logistic";            // logistic | lasso
  std::string missingness = "auto";               // auto | none | logistic | lasso
  std::optional<double> truncate_pct;             // percent in (0, 50)
  std::string unadjusted_convention = "arm_mean"; // arm_mean | pooled
  bool hajek = false;
  int bootstrap_reps = 1000;
  std::string ci = "percentile";  // percentile | normal
  double level = 0.95;

  // simulate
  std::vector<int> sim_n_studies = {15, 50};
  int sim_replicates = 1000;
  std::string sim_panel = "both";  // correct | misspecified | both
};

// Runs the configured mode; writes artifacts under cfg.out_dir; on error
// removes files created during this run and reports the cause on `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Helpers exposed for tests.
Dataset load_input(const std::string& input);
std::vector<TargetParameter> parse_contrasts(const Dataset& d,
                                             const std::vector<std::string>& specs);

}  // namespace nma
