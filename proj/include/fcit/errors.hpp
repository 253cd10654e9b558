#pragma once

#include <stdexcept>
#include <string>

namespace fcit {

// Error taxonomy shared by the library and the CLI exit-code mapping.
// Argument/precondition violations use std::invalid_argument directly.

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; message carries the offending line number.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No usable subjects, constant channel, all-zero pairwise distances.
struct degenerate_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every candidate of a GCV grid was skipped.
struct tuning_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular solves, failed eigendecompositions, matrices that are not PSD.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fcit
