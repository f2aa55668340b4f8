#pragma once

#include <stdexcept>
#include <string>

namespace sigdet {

// Error taxonomy mirrored by CLI exit codes:
//   ConfigError -> 1, DataError -> 2, anything else -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when an expected count is requested for a subinterval with zero
// total exposure (N = 0 for the occurrence model, H = 0 for duration).
struct NoExposureError : DataError {
    using DataError::DataError;
};

}  // namespace sigdet
