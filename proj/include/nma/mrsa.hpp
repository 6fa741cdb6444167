#pragma once

// Embedded antibiotic network meta-analysis dataset: 27 two-arm randomized
// trials comparing parenteral antibiotics for suspected or confirmed MRSA
// (cSSTI or pneumonia), arm-level clinical-cure counts, with study year
// (centered at 2000), infection site and MRSA-confirmation indicators as
// study-level covariates. Six studies report no usable outcome and are
// flagged missing.

#include "nma/data_model.hpp"

namespace nma {

const char* mrsa_csv_text();
Dataset mrsa_fixture();

}  // namespace nma
