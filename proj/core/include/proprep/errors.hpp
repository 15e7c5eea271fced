#pragma once

#include <stdexcept>
#include <string>

namespace proprep {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed run configuration (unknown covariate, empty regime list, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent panel data.
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical failure in a fit or weight computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Fitted factual density at an observed treatment value fell below the clamp.
class PositivityError : public NumericError {
public:
    PositivityError(const std::string& what, int k, const std::string& regime,
                    const std::string& subject)
        : NumericError(what + " (k=" + std::to_string(k) + ", regime=" + regime +
                       ", subject=" + subject + ")"),
          k(k), regime(regime), subject(subject) {}
    int k;
    std::string regime;
    std::string subject;
};

// A resolved constraint implies an invalid intervention density or an
// unbounded scaling factor.
class InfeasibleConstraintError : public NumericError {
public:
    using NumericError::NumericError;
};

// Exact enumeration would exceed the configured state bound.
class StateSpaceError : public Error {
public:
    using Error::Error;
};

// A validation suite failed (used by the `validate` subcommand).
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace proprep
