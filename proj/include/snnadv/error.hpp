#pragma once

#include <stdexcept>
#include <string>

namespace snnadv {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer geometry mismatch (messages name the offending shapes).
struct ShapeError : Error {
    using Error::Error;
};

// Bad argument value: out-of-range label, empty dataset, encoding range, ...
struct ValueError : Error {
    using Error::Error;
};

// Invalid or inconsistent configuration (attack parameters, horizons, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed file: bad magic, truncation, version or checksum mismatch.
struct FormatError : Error {
    using Error::Error;
};

// ANN -> SNN conversion failure (unsupported layer, degenerate calibration).
struct ConversionError : Error {
    using Error::Error;
};

// Training loss became non-finite; carries the epoch where it happened.
struct TrainingDivergedError : Error {
    int epoch;
    explicit TrainingDivergedError(int epoch_, const std::string& what_)
        : Error(what_), epoch(epoch_) {}
};

}  // namespace snnadv
