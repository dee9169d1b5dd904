#pragma once

#include <stdexcept>
#include <string>

namespace cdal {

/// Malformed problem data or configuration (dimension mismatch, bad bounds, unknown keys).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values showed up in the solver iterates.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// The dense reference solver ran out of budget.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cdal
