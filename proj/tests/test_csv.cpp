#include <doctest.h>

#include <fstream>
#include <sstream>

#include "nma/csv.hpp"
#include "nma/errors.hpp"
#include "nma/mrsa.hpp"
#include "nma/simulation.hpp"

using namespace nma;

TEST_CASE("empty input is a parse error") {
  std::istringstream in("");
  CHECK_THROWS_AS(ingest_csv_stream(in, "test"), parse_error);
}

TEST_CASE("header must match the documented schema") {
  std::istringstream in("study,treatment,n,mean,sd,events,missing\n");
  CHECK_THROWS_AS(ingest_csv_stream(in, "test"), parse_error);
}

TEST_CASE("parse errors carry row and column context") {
  std::istringstream in(
      "study_id,treatment,n,mean,sd,events,missing,w\n"
      "s1,a,10,,,5,0,1.0\n"
      "s1,b,xx,,,4,0,1.0\n");
  try {
    ingest_csv_stream(in, "test");
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("'n'") != std::string::npos);
  }
}

TEST_CASE("missing arms must leave summaries empty") {
  std::istringstream in(
      "study_id,treatment,n,mean,sd,events,missing,w\n"
      "s1,a,10,,,5,1,1.0\n");
  CHECK_THROWS_AS(ingest_csv_stream(in, "test"), parse_error);
}

TEST_CASE("binary ingestion synthesizes mean and sd from events") {
  std::istringstream in(
      "study_id,treatment,n,mean,sd,events,missing,w\n"
      "s1,a,10,,,5,0,1.0\n"
      "s1,b,20,,,5,0,1.0\n"
      "s2,a,10,,,1,0,2.0\n"
      "s2,b,10,,,9,0,2.0\n");
  const auto d = ingest_csv_stream(in, "test");
  CHECK(d.outcome_kind == OutcomeKind::binary);
  CHECK(d.studies[0].arms[0].outcome.mean == doctest::Approx(0.5));
  CHECK(d.studies[0].arms[1].outcome.mean == doctest::Approx(0.25));
  CHECK(d.studies[0].arms[1].outcome.sd ==
        doctest::Approx(binary_sd(0.25)).epsilon(1e-14));
}

TEST_CASE("inconsistent provided binary summaries fail validation") {
  std::istringstream in(
      "study_id,treatment,n,mean,sd,events,missing,w\n"
      "s1,a,10,0.7,,5,0,1.0\n"
      "s1,b,10,,,5,0,1.0\n");
  CHECK_THROWS_AS(ingest_csv_stream(in, "test"), data_error);
}

TEST_CASE("mixed events and mean/sd arms are rejected") {
  std::istringstream in(
      "study_id,treatment,n,mean,sd,events,missing,w\n"
      "s1,a,10,,,5,0,1.0\n"
      "s1,b,10,0.5,0.2,,0,1.0\n");
  CHECK_THROWS_AS(ingest_csv_stream(in, "test"), parse_error);
}

TEST_CASE("simulated dataset round-trips through CSV exactly") {
  DgpConfig cfg;
  cfg.n_studies = 12;
  cfg.seed = 321;
  const auto d = generate_dataset(cfg);
  std::ostringstream out;
  write_dataset_csv_stream(d, out);
  std::istringstream in(out.str());
  const auto back = ingest_csv_stream(in, "roundtrip");
  CHECK(datasets_equal(d, back));
  // And a second round trip is byte-identical.
  std::ostringstream out2;
  write_dataset_csv_stream(back, out2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("embedded fixture equals the shipped data file") {
  std::ifstream f(std::string(NMA_SOURCE_DIR) + "/data/mrsa.csv");
  REQUIRE(f.good());
  std::stringstream buf;
  buf << f.rdbuf();
  CHECK(buf.str() == std::string(mrsa_csv_text()));
}

TEST_CASE("fixture round-trips") {
  const auto d = mrsa_fixture();
  std::ostringstream out;
  write_dataset_csv_stream(d, out);
  std::istringstream in(out.str());
  CHECK(datasets_equal(d, ingest_csv_stream(in, "roundtrip")));
}
