#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mobent {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data; carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Violated precondition or domain invariant (bad argument, empty input, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A coordinate fell outside the grid extent.
class OutOfGridError : public Error {
public:
    using Error::Error;
};

/// Model fitting or prediction failure (non-convergence, rank deficiency,
/// unseen factor level, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

} // namespace mobent
