// error.hpp: Exception types shared by all subrad modules

#pragma once

#include <stdexcept>
#include <string>

namespace subrad {

// Bad argument: non-positive sizes, parity violations, index out of range.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Request exceeds what a dense full-space engine can hold.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Mode grid or integration setup cannot deliver the requested accuracy.
class ConfigurationError : public std::runtime_error {
public:
    explicit ConfigurationError(const std::string& what, double measured = 0.0)
        : std::runtime_error(what), measured_(measured) {}
    double measured() const noexcept { return measured_; }

private:
    double measured_;
};

// Numerical integration lost unitarity or otherwise diverged.
class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation undefined for this input (e.g. raising an R+-annihilated state).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace subrad
