#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qanneal {

// Problem size exceeds a hard enumeration/materialization limit.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed on-disk document; message carries line/field context.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Norm drift of a propagation exceeded its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double drift, std::int64_t steps)
        : std::runtime_error(msg), norm_drift(drift), steps(steps) {}

    double norm_drift;
    std::int64_t steps;
};

// Iterative eigensolver failed to reach its residual target.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, double residual)
        : std::runtime_error(msg), residual(residual) {}

    double residual;
};

// A record set is missing entries required by an aggregation.
class IncompleteDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qanneal
