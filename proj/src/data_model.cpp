#include "nma/data_model.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nma {

double binary_sd(double mean) {
  if (!(mean >= 0.0 && mean <= 1.0))
    throw std::domain_error("binary_sd: mean outside [0,1]");
  return std::sqrt(mean * (1.0 - mean));
}

OutcomeSummary OutcomeSummary::missing_outcome(OutcomeKind kind) {
  OutcomeSummary o;
  o.kind = kind;
  o.missing = true;
  return o;
}

OutcomeSummary OutcomeSummary::continuous(double mean, double sd) {
  OutcomeSummary o;
  o.kind = OutcomeKind::continuous;
  o.mean = mean;
  o.sd = sd;
  return o;
}

OutcomeSummary OutcomeSummary::binary_from_events(long events, long arm_size) {
  if (arm_size <= 0) throw std::domain_error("arm size must be positive");
  if (events < 0 || events > arm_size)
    throw std::domain_error("events outside [0, arm size]");
  OutcomeSummary o;
  o.kind = OutcomeKind::binary;
  o.events = events;
  o.mean = static_cast<double>(events) / static_cast<double>(arm_size);
  o.sd = binary_sd(o.mean);
  return o;
}

OutcomeSummary OutcomeSummary::binary_from_mean(double mean) {
  OutcomeSummary o;
  o.kind = OutcomeKind::binary;
  o.mean = mean;
  o.sd = binary_sd(mean);
  return o;
}

bool Study::has_treatment(int treatment_id) const {
  return arm_index(treatment_id) >= 0;
}

int Study::arm_index(int treatment_id) const {
  for (std::size_t j = 0; j < arms.size(); ++j)
    if (arms[j].treatment.id == treatment_id) return static_cast<int>(j);
  return -1;
}

std::size_t Dataset::n_arms() const {
  std::size_t n = 0;
  for (const auto& s : studies) n += s.arms.size();
  return n;
}

const TreatmentCode& Dataset::treatment_by_label(const std::string& label) const {
  for (const auto& t : treatments)
    if (t.label == label) return t;
  throw std::invalid_argument("unknown treatment label '" + label + "'");
}

std::string describe(const Violation& v) {
  std::ostringstream os;
  if (!v.study_id.empty()) {
    os << "study " << v.study_id;
    if (v.arm_index >= 0) os << " arm " << v.arm_index;
    os << ": ";
  }
  os << v.rule;
  return os.str();
}

std::vector<Violation> validate_dataset(const Dataset& d) {
  std::vector<Violation> out;
  auto flag = [&](const std::string& sid, int arm, const std::string& rule) {
    out.push_back(Violation{sid, arm, rule});
  };

  // Treatment registry: dense ids, unique labels.
  {
    std::set<int> ids;
    std::set<std::string> labels;
    for (const auto& t : d.treatments) {
      if (!ids.insert(t.id).second) flag("", -1, "duplicate treatment id " + std::to_string(t.id));
      if (!labels.insert(t.label).second) flag("", -1, "duplicate treatment label '" + t.label + "'");
    }
    for (int k = 0; k < static_cast<int>(d.treatments.size()); ++k)
      if (!ids.count(k))
        flag("", -1, "treatment ids not dense 0..K-1 (missing " + std::to_string(k) + ")");
  }

  std::set<std::string> seen_study_ids;
  for (const auto& s : d.studies) {
    if (!seen_study_ids.insert(s.study_id).second)
      flag(s.study_id, -1, "duplicate study id");
    if (s.covariates.values.size() != d.covariate_names.size())
      flag(s.study_id, -1, "covariate vector length differs from dataset schema");
    for (double v : s.covariates.values)
      if (!std::isfinite(v)) flag(s.study_id, -1, "non-finite covariate");
    if (s.arms.empty()) flag(s.study_id, -1, "study has no arms");

    std::set<int> arm_treatments;
    for (std::size_t j = 0; j < s.arms.size(); ++j) {
      const auto& arm = s.arms[j];
      const int ja = static_cast<int>(j);
      if (arm.n < 1) flag(s.study_id, ja, "arm size must be >= 1");
      if (!arm_treatments.insert(arm.treatment.id).second)
        flag(s.study_id, ja, "duplicate treatment within study");
      bool registered = false;
      for (const auto& t : d.treatments)
        if (t.id == arm.treatment.id && t.label == arm.treatment.label) registered = true;
      if (!registered) flag(s.study_id, ja, "treatment not registered in dataset");
      const auto& o = arm.outcome;
      if (o.kind != d.outcome_kind)
        flag(s.study_id, ja, "outcome kind differs from dataset outcome kind");
      if (o.missing) {
        if (o.mean != 0.0 || o.sd != 0.0 || o.events.has_value())
          flag(s.study_id, ja, "missing outcome must carry no summary values");
        continue;
      }
      if (!std::isfinite(o.mean) || !std::isfinite(o.sd))
        flag(s.study_id, ja, "non-finite outcome summary");
      if (o.sd < 0.0) flag(s.study_id, ja, "negative outcome sd");
      if (o.kind == OutcomeKind::binary) {
        if (!(o.mean >= 0.0 && o.mean <= 1.0))
          flag(s.study_id, ja, "binary mean outside [0,1]");
        else if (std::fabs(o.sd - binary_sd(o.mean)) > 1e-12)
          flag(s.study_id, ja, "binary sd differs from sqrt(mean*(1-mean))");
        if (o.events.has_value()) {
          if (*o.events < 0) flag(s.study_id, ja, "negative event count");
          if (arm.n >= 1 &&
              std::fabs(o.mean - static_cast<double>(*o.events) / arm.n) > 1e-12)
            flag(s.study_id, ja, "events/n does not match mean");
        }
      } else if (o.events.has_value()) {
        flag(s.study_id, ja, "events present on a continuous outcome");
      }
    }
  }
  return out;
}

}  // namespace nma
