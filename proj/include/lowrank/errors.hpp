#pragma once

#include <stdexcept>

namespace lowrank {

// A matrix required to have full column rank does not.
struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric routine failed to converge or produced invalid output.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A synthetic-instance generator could not satisfy its construction checks.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A file does not conform to the expected on-disk format.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lowrank
