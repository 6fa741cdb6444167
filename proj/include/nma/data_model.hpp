#pragma once

// Typed representation of aggregate network meta-analysis data: studies are
// clusters of treatment arms, each arm reporting only summary statistics
// (mean and standard deviation of the outcome, or events for binary
// outcomes). All types are immutable in spirit: construct, validate, share.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nma {

enum class OutcomeKind { continuous, binary };

struct TreatmentCode {
  int id = 0;          // dense 0..K-1 within a dataset
  std::string label;   // unique within a dataset
};

struct OutcomeSummary {
  OutcomeKind kind = OutcomeKind::continuous;
  bool missing = false;
  double mean = 0.0;                 // outcome units, or proportion in [0,1]
  double sd = 0.0;                   // for binary: sqrt(mean*(1-mean))
  std::optional<long> events;        // binary only

  static OutcomeSummary missing_outcome(OutcomeKind kind);
  static OutcomeSummary continuous(double mean, double sd);
  static OutcomeSummary binary_from_events(long events, long arm_size);
  static OutcomeSummary binary_from_mean(double mean);
};

struct ArmRecord {
  TreatmentCode treatment;
  long n = 0;  // subjects in the arm, >= 1
  OutcomeSummary outcome;
};

// Named study-level covariates; the same names, in the same order, across
// every study in a dataset. Categorical covariates arrive pre-encoded as
// 0/1 indicators.
struct CovariateVector {
  std::vector<double> values;
};

struct Study {
  std::string study_id;
  CovariateVector covariates;
  std::vector<ArmRecord> arms;

  bool has_treatment(int treatment_id) const;
  // Index of the arm with this treatment, or -1.
  int arm_index(int treatment_id) const;
};

struct Dataset {
  std::vector<Study> studies;
  std::vector<TreatmentCode> treatments;
  std::vector<std::string> covariate_names;
  OutcomeKind outcome_kind = OutcomeKind::continuous;

  std::size_t n_arms() const;
  const TreatmentCode& treatment_by_label(const std::string& label) const;
};

enum class ContrastKind { treatment_mean, mean_difference, risk_ratio };

struct TargetParameter {
  ContrastKind kind = ContrastKind::treatment_mean;
  int a = 0;                 // treatment id
  std::optional<int> b;      // comparator for difference / ratio
};

// sqrt(mean * (1 - mean)); the binary-outcome reduction of the arm-level
// standard deviation. Throws std::domain_error outside [0,1].
double binary_sd(double mean);

struct Violation {
  std::string study_id;  // empty for dataset-level rules
  int arm_index = -1;    // -1 when not arm-specific
  std::string rule;
};

// Diagnostic check of every type invariant; returns an empty list iff the
// dataset is well formed. Never throws.
std::vector<Violation> validate_dataset(const Dataset& d);

std::string describe(const Violation& v);

}  // namespace nma
