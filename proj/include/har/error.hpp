#pragma once

#include <stdexcept>
#include <string>

namespace har {

/// Base for every error the library throws. Callers that only need to tell
/// "bad input data or model file" apart from programming errors catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two arrays or tensors whose shapes do not fit the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input data is unusable for the requested operation (too short, empty split,
/// non-finite values, ...).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace har
