#pragma once

// Arm-level CSV schema, one row per arm:
//
//   study_id,treatment,n,mean,sd,events,missing,<covariate columns...>
//
// Binary datasets may omit mean/sd and give events only (mean and sd are
// then synthesized as events/n and sqrt(mean*(1-mean))). A row with
// missing=1 must leave mean, sd and events empty. The outcome kind is
// inferred: binary when every non-missing arm carries an event count,
// continuous when none does.

#include <iosfwd>
#include <string>

#include "nma/data_model.hpp"

namespace nma {

Dataset ingest_csv(const std::string& path);
Dataset ingest_csv_stream(std::istream& in, const std::string& origin);

void write_dataset_csv(const Dataset& d, const std::string& path);
void write_dataset_csv_stream(const Dataset& d, std::ostream& out);

// Structural equality over every field; used by the round-trip tests.
bool datasets_equal(const Dataset& a, const Dataset& b);

}  // namespace nma
