#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iqvi {

/// Syntax error in an expression source string. `offset` is the byte
/// position of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Domain error while evaluating an expression (division by zero,
/// sqrt of a negative, overflow, missing variable).
class EvalError : public std::runtime_error {
public:
    EvalError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Malformed problem or run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside the solver (non-convergence, CFL violation,
/// non-monotone stencil).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Artifact I/O failure (missing file, schema mismatch, grid mismatch).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace iqvi
