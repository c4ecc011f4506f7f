#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wflow {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Derived data (labelings, geodesic fields) built for a different field.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), final_residual(residual) {}
  double final_residual;
};

struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, long step_index)
      : std::runtime_error(what), step(step_index) {}
  long step;
};

using WarningHandler = std::function<void(std::string_view)>;

// Process-wide sink for non-fatal diagnostics (under-resolved interface,
// phase field leaving its bounded range). Tests swap it to capture output.
inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

inline void warn(std::string_view msg) {
  if (warning_handler()) warning_handler()(msg);
}

}  // namespace wflow
