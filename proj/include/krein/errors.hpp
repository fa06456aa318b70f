#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace krein {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed structured input; `field` names the offending entry.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& what)
        : Error("parse error in '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Well-formed input that violates a model invariant (negative mass, overlapping pieces, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Monte Carlo run that produced no usable paths, or too many discarded ones.
class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace krein
