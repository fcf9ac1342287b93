#pragma once

#include <stdexcept>
#include <string>

namespace twz {

// Solver / numerical failure (non-convergence, unstable configuration, ...).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Constraint system admits no acceptable solution; message names the binding
// constraint.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace twz
