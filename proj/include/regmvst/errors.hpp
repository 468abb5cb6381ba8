#pragma once

#include <stdexcept>
#include <string>

namespace regmvst {

/// Input outside the supported domain (non-positive argument, bad shape, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A matrix that must be SPD failed to factor; message names the matrix.
class DecompositionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Estimation cannot proceed (singular aggregates, empty grid, stalled worker).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system failure (open/write).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace regmvst
