#pragma once

#include <stdexcept>
#include <string>

namespace gkdmd {

// Base for every error raised by the library. Subclasses tag the failure
// class so the CLI can map them to messages without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed something malformed: dimension mismatch, bad parameter.
class InputError : public Error {
public:
    using Error::Error;
};

// A numerical routine failed: non-convergence, non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

// The fitted reduced model is inconsistent (pairing, biorthogonality, realness).
class ModelError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Reconstruction-error metric cannot be evaluated (vanishing denominator).
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace gkdmd
