// errors.hpp: exception types shared by all pseudobath modules

#pragma once

#include <stdexcept>
#include <string>

namespace pseudobath {

// Argument outside the mathematical domain of a function (negative frequency, ω ≤ floor, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inconsistent or invalid configuration: mismatched dimensions, bad grids, step sizes.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine failed (eigensolver non-convergence, corrupted cache file, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pseudobath
