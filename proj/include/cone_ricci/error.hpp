#pragma once

#include <stdexcept>
#include <string>

namespace cone_ricci {

// Base of everything the library throws on bad input. The CLI maps any
// Error to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation outside the domain of a formula (singular point, asymptote,
// radius outside the grid).
class DomainError : public Error {
public:
    using Error::Error;
};

// A parameter violates a type invariant (cone exponent range, grid size...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Configuration file or override rejected. `field` is the dotted path of the
// offending key, empty when the problem is not tied to one key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace cone_ricci
