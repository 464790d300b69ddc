#pragma once

#include <stdexcept>
#include <string>

namespace fsc {

// Base class for all library errors. Subclasses split into two families:
// input problems (DimensionError, DomainError, ValidationError) and
// numerical failures (SolverError, NumericError). The CLI maps the former
// to exit code 2 and the latter to exit code 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched grids, lengths, or shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input outside the mathematical domain of an operation (non-PD matrix for a
// log map, nonmonotone quantiles, infeasible alpha, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent files / configurations.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Iterative solver failed to converge within its budget.
class SolverError : public Error {
public:
    using Error::Error;
};

// Linear-algebra breakdown (singular system, failed factorization).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace fsc
