#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace mirrorcle {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Geometry that has no well-defined answer (parallel sight line, eye on the mirror plane).
class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& what, std::ptrdiff_t index = -1)
        : Error(index >= 0 ? what + " (point " + std::to_string(index) + ")" : what), index_(index) {}

    /// Index of the offending point in a batch call, or -1.
    std::ptrdiff_t index() const noexcept { return index_; }

private:
    std::ptrdiff_t index_;
};

class NotOnScreenPlane : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidViewing : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NoIntersection : public Error {
public:
    using Error::Error;
};

class ParallelRays : public Error {
public:
    using Error::Error;
};

class InvalidDepth : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the 1-based line number (0 when not line-specific).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A parsed value that breaks a domain invariant; names the field.
class InvariantViolation : public Error {
public:
    InvariantViolation(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace mirrorcle
