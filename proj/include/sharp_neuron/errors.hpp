#pragma once

#include <stdexcept>
#include <string>

namespace sn {

// Input outside the mathematical domain of an operation (non-finite t, r < 1, empty batch).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration (unknown identifiers, out-of-range parameters).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller violated an operation precondition that has no silent fallback.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Numerical failure: quadrature did not converge, gradient became non-finite.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sn
