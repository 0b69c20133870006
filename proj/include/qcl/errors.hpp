#pragma once

#include <stdexcept>
#include <string>

namespace qcl {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (mismatched lengths, bad ranges, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A documented pre/post condition was violated by the caller or the data.
class ContractError : public Error {
public:
    using Error::Error;
};

// Iterative solver failed to reach the requested residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double residual_)
        : Error(msg), residual(residual_) {}
    double residual;
};

// A basis truncation was too small; carries the achieved norm deficit.
class TruncationError : public Error {
public:
    TruncationError(const std::string& msg, double deficit_)
        : Error(msg), norm_deficit(deficit_) {}
    double norm_deficit;
};

// Least-squares / mode fitting failures (underdetermined systems etc.).
class FitError : public Error {
public:
    using Error::Error;
};

// Phase-space grid problems: incompatible grids, boundary mass, aliasing.
class GridError : public Error {
public:
    using Error::Error;
};

// Unsupported domain geometry (e.g. non-annular domain families).
class GeometryError : public Error {
public:
    using Error::Error;
};

// A characteristic left the grid during integration.
class TrajectoryError : public Error {
public:
    TrajectoryError(const std::string& msg, double exit_time_)
        : Error(msg), exit_time(exit_time_) {}
    double exit_time;
};

// File / serialization problems.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace qcl
