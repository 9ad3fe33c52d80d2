#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mds {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or configuration violates its documented invariants.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two operands that must agree in length or shape do not.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mds
