#pragma once

#include <stdexcept>
#include <string>

namespace rwb {

// Malformed or out-of-range input data (files, edge lists, labels).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or incompatible configuration (parameter ranges, task/method mismatch).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computation exceeded its wall-clock budget (reported as OOR).
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An internal consistency check failed.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace rwb
