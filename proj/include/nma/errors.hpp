#pragma once

#include <stdexcept>
#include <string>

namespace nma {

// Base class so callers can catch anything raised by this library.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (carries row/column context in the message).
struct parse_error : error {
  using error::error;
};

// A dataset that violates its own invariants.
struct data_error : error {
  using error::error;
};

// Rank-deficient design matrix; names the dependent columns.
struct singular_error : error {
  using error::error;
};

// Estimation cannot proceed (absent treatment, failed fit, bad contrast).
struct estimation_error : error {
  using error::error;
};

// A required propensity score is exactly zero.
struct positivity_error : estimation_error {
  using estimation_error::estimation_error;
};

// Outcome scaling hit the boundary; a wider bounds policy is needed.
struct bounds_error : estimation_error {
  using estimation_error::estimation_error;
};

// TMLE fluctuation solve failed; message carries diagnostics.
struct fluctuation_error : estimation_error {
  using estimation_error::estimation_error;
};

// Bootstrap could not retain any replicate.
struct inference_error : error {
  using error::error;
};

}  // namespace nma
