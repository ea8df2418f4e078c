#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergokit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is a 0-based column.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t pos)
        : Error(what + " at position " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

private:
    std::size_t pos_;
};

/// Evaluation left the real domain (log of nonpositive, division by zero, overflow).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Model file or model invariant violation.
class ModelError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Value outside the representable window of the linear domain.
class RangeError : public Error {
public:
    using Error::Error;
};

}  // namespace ergokit
