#pragma once

#include <stdexcept>
#include <string>

namespace fida {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A documented precondition was violated (CFL bounds, argument ranges, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// Non-finite input where finite values are required.
struct DomainError : Error {
    using Error::Error;
};

// State magnitude exceeded the overflow guard during integration.
struct BlowUpError : Error {
    BlowUpError(const std::string& what, double t) : Error(what), time(t) {}
    double time;
};

// hausdorff/chamfer are undefined for empty operands.
struct EmptySetError : Error {
    using Error::Error;
};

// Feature sets of different kinds cannot be compared.
struct KindMismatchError : Error {
    using Error::Error;
};

// featurize() with pad_policy=reject and mismatched cardinality.
struct CardinalityError : Error {
    using Error::Error;
};

// Not enough data to run an estimator (e.g. too few peaks).
struct InsufficientDataError : Error {
    using Error::Error;
};

// Parameter estimation could not produce a finite answer.
struct EstimationError : Error {
    using Error::Error;
};

// Malformed or inconsistent configuration input.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace fida
