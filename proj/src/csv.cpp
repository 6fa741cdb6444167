#include "nma/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nma/errors.hpp"

namespace nma {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, std::size_t row, const std::string& col,
                       const std::string& what) {
  std::ostringstream os;
  os << origin << " row " << row;
  if (!col.empty()) os << " column '" << col << "'";
  os << ": " << what;
  throw parse_error(os.str());
}

double parse_double(const std::string& origin, std::size_t row, const std::string& col,
                    const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(origin, row, col, "cannot parse '" + s + "' as a number");
  }
}

long parse_long(const std::string& origin, std::size_t row, const std::string& col,
                const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(origin, row, col, "cannot parse '" + s + "' as an integer");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawArm {
  std::size_t row;
  std::string treatment;
  long n;
  std::optional<double> mean, sd;
  std::optional<long> events;
  bool missing;
};

}  // namespace

Dataset ingest_csv_stream(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw parse_error(origin + ": empty file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed = {"study_id", "treatment", "n",
                                          "mean",     "sd",        "events",
                                          "missing"};
  if (header.size() < fixed.size())
    throw parse_error(origin + ": header must start with study_id,treatment,n,mean,sd,events,missing");
  for (std::size_t j = 0; j < fixed.size(); ++j)
    if (trim(header[j]) != fixed[j])
      fail(origin, 1, fixed[j], "expected header column '" + fixed[j] + "', found '" +
                                    trim(header[j]) + "'");
  std::vector<std::string> covariate_names;
  for (std::size_t j = fixed.size(); j < header.size(); ++j) {
    const auto name = trim(header[j]);
    if (name.empty()) fail(origin, 1, "", "empty covariate column name");
    covariate_names.push_back(name);
  }

  // First pass: raw rows grouped by study in order of first appearance.
  std::vector<std::string> study_order;
  std::map<std::string, std::vector<RawArm>> arms_by_study;
  std::map<std::string, std::vector<double>> covs_by_study;
  std::vector<std::string> treatment_order;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      fail(origin, row, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(f.size()));
    RawArm arm;
    arm.row = row;
    const std::string sid = trim(f[0]);
    if (sid.empty()) fail(origin, row, "study_id", "empty study id");
    arm.treatment = trim(f[1]);
    if (arm.treatment.empty()) fail(origin, row, "treatment", "empty treatment label");
    arm.n = parse_long(origin, row, "n", trim(f[2]));
    const std::string mean_s = trim(f[3]), sd_s = trim(f[4]), ev_s = trim(f[5]);
    if (!mean_s.empty()) arm.mean = parse_double(origin, row, "mean", mean_s);
    if (!sd_s.empty()) arm.sd = parse_double(origin, row, "sd", sd_s);
    if (!ev_s.empty()) arm.events = parse_long(origin, row, "events", ev_s);
    const std::string miss_s = trim(f[6]);
    if (miss_s != "0" && miss_s != "1")
      fail(origin, row, "missing", "missing flag must be 0 or 1");
    arm.missing = miss_s == "1";
    if (arm.missing && (arm.mean || arm.sd || arm.events))
      fail(origin, row, "missing", "missing arm must leave mean/sd/events empty");

    std::vector<double> covs;
    for (std::size_t j = 0; j < covariate_names.size(); ++j)
      covs.push_back(parse_double(origin, row, covariate_names[j], trim(f[7 + j])));

    if (!arms_by_study.count(sid)) {
      study_order.push_back(sid);
      covs_by_study[sid] = covs;
    } else if (covs != covs_by_study[sid]) {
      fail(origin, row, "", "covariates differ between arms of study " + sid);
    }
    arms_by_study[sid].push_back(arm);
    bool seen = false;
    for (const auto& t : treatment_order) seen = seen || t == arm.treatment;
    if (!seen) treatment_order.push_back(arm.treatment);
  }
  if (study_order.empty()) throw parse_error(origin + ": no data rows");

  // Outcome kind: binary iff every non-missing arm has an event count.
  bool any_events = false, any_without = false;
  for (const auto& [sid, arms] : arms_by_study)
    for (const auto& a : arms) {
      if (a.missing) continue;
      (a.events ? any_events : any_without) = true;
    }
  if (any_events && any_without)
    throw parse_error(origin + ": mix of event-count and mean/sd arms; outcome kind ambiguous");
  const OutcomeKind kind = any_events ? OutcomeKind::binary : OutcomeKind::continuous;

  Dataset d;
  d.outcome_kind = kind;
  d.covariate_names = covariate_names;
  for (std::size_t k = 0; k < treatment_order.size(); ++k)
    d.treatments.push_back(TreatmentCode{static_cast<int>(k), treatment_order[k]});

  for (const auto& sid : study_order) {
    Study s;
    s.study_id = sid;
    s.covariates.values = covs_by_study[sid];
    for (const auto& raw : arms_by_study[sid]) {
      ArmRecord arm;
      arm.treatment = d.treatment_by_label(raw.treatment);
      arm.n = raw.n;
      if (raw.missing) {
        arm.outcome = OutcomeSummary::missing_outcome(kind);
      } else if (kind == OutcomeKind::binary) {
        if (!raw.events)
          fail(origin, raw.row, "events", "binary arm without event count");
        if (raw.n <= 0) fail(origin, raw.row, "n", "arm size must be positive");
        if (*raw.events < 0 || *raw.events > raw.n)
          fail(origin, raw.row, "events", "events outside [0, n]");
        arm.outcome = OutcomeSummary::binary_from_events(*raw.events, raw.n);
        // Keep user-provided values so validation can flag inconsistencies.
        if (raw.mean) arm.outcome.mean = *raw.mean;
        if (raw.sd) arm.outcome.sd = *raw.sd;
        else if (raw.mean) arm.outcome.sd = binary_sd(std::clamp(*raw.mean, 0.0, 1.0));
      } else {
        if (!raw.mean || !raw.sd)
          fail(origin, raw.row, "mean", "continuous arm requires mean and sd");
        arm.outcome = OutcomeSummary::continuous(*raw.mean, *raw.sd);
        if (raw.events) arm.outcome.events = raw.events;  // flagged by validation
      }
      s.arms.push_back(arm);
    }
    d.studies.push_back(std::move(s));
  }

  const auto violations = validate_dataset(d);
  if (!violations.empty()) {
    std::ostringstream os;
    os << origin << ": dataset failed validation with " << violations.size()
       << " violation(s):";
    for (const auto& v : violations) os << "\n  - " << describe(v);
    throw data_error(os.str());
  }
  return d;
}

Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open file");
  return ingest_csv_stream(in, path);
}

void write_dataset_csv_stream(const Dataset& d, std::ostream& out) {
  out << "study_id,treatment,n,mean,sd,events,missing";
  for (const auto& c : d.covariate_names) out << ',' << c;
  out << '\n';
  for (const auto& s : d.studies) {
    for (const auto& arm : s.arms) {
      out << s.study_id << ',' << arm.treatment.label << ',' << arm.n << ',';
      if (!arm.outcome.missing) {
        if (d.outcome_kind == OutcomeKind::binary && arm.outcome.events) {
          // Events-only form: mean and sd are derived on ingest.
          out << ",," << *arm.outcome.events << ",0";
        } else {
          out << format_double(arm.outcome.mean) << ',' << format_double(arm.outcome.sd)
              << ',';
          if (arm.outcome.events) out << *arm.outcome.events;
          out << ",0";
        }
      } else {
        out << ",,,1";
      }
      for (double v : s.covariates.values) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write " + path);
  write_dataset_csv_stream(d, out);
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  // Treatment ids are an in-memory detail re-derived from row order on
  // ingest; equality is over labels and every serialized field. Datasets
  // that only register treatments appearing in arms compare as equal
  // across a serialize -> parse round trip.
  if (a.outcome_kind != b.outcome_kind || a.covariate_names != b.covariate_names ||
      a.studies.size() != b.studies.size())
    return false;
  auto labels = [](const Dataset& d) {
    std::set<std::string> out;
    for (const auto& s : d.studies)
      for (const auto& arm : s.arms) out.insert(arm.treatment.label);
    return out;
  };
  if (labels(a) != labels(b)) return false;
  for (std::size_t i = 0; i < a.studies.size(); ++i) {
    const auto& sa = a.studies[i];
    const auto& sb = b.studies[i];
    if (sa.study_id != sb.study_id || sa.covariates.values != sb.covariates.values ||
        sa.arms.size() != sb.arms.size())
      return false;
    for (std::size_t j = 0; j < sa.arms.size(); ++j) {
      const auto& x = sa.arms[j];
      const auto& y = sb.arms[j];
      if (x.treatment.label != y.treatment.label || x.n != y.n ||
          x.outcome.kind != y.outcome.kind ||
          x.outcome.missing != y.outcome.missing || x.outcome.events != y.outcome.events)
        return false;
      if (!x.outcome.missing &&
          (x.outcome.mean != y.outcome.mean || x.outcome.sd != y.outcome.sd))
        return false;
    }
  }
  return true;
}

}  // namespace nma
