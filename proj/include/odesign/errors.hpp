#pragma once

#include <stdexcept>
#include <string>

namespace odesign {

/// A structurally valid request that exceeds the desk-scale capability caps
/// (dimension limits, enumeration budgets). CLI maps this to exit code 3.
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical escalation exhausted (divided-difference fallback failed).
/// CLI maps this to exit code 4.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace odesign
