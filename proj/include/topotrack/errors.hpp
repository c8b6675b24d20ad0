#pragma once

#include <stdexcept>
#include <string>

namespace topotrack {

// Shape or length mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input files, invalid configuration, inconsistent records.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf detected where a finite value is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace topotrack
