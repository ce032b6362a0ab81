#pragma once

#include <stdexcept>

namespace colat {

// Recoverable positioning failures. The orchestration layer catches these to
// fall back or skip a window; anything else escaping a pipeline call is a
// caller bug or an I/O problem.
struct InsufficientAnchors : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientNeighbors : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File-format problems, with the offending field/line in the message.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelFormatError : FormatError {
    using FormatError::FormatError;
};

struct ModelVersionError : ModelFormatError {
    using ModelFormatError::ModelFormatError;
};

struct ModelIntegrityError : ModelFormatError {
    using ModelFormatError::ModelFormatError;
};

struct ScenarioFormatError : FormatError {
    using FormatError::FormatError;
};

}  // namespace colat
