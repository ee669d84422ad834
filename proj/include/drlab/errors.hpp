#pragma once

#include <stdexcept>
#include <string>

namespace drlab {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Solver or quadrature could not reach the requested tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Node, memory or support budget exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed command line or configuration.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ExitCode : int {
    ok = 0,
    validation_failure = 1,
    usage = 2,
    numerical = 3,
    resource = 4,
};

namespace tol {
inline constexpr double closed_form = 1e-12;
inline constexpr double ode_abs = 1e-12;
inline constexpr double ode_rel = 1e-10;
inline constexpr double phase = 1e-9;
inline constexpr double hazard = 1e-12;
inline constexpr double pmf_drift = 1e-9;
}  // namespace tol

inline constexpr double default_node_budget = 2e7;

}  // namespace drlab
