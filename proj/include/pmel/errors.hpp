#pragma once

#include <stdexcept>
#include <string>

namespace pmel {

// Base class for all library errors so callers can catch pmel failures
// separately from std:: ones.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration is syntactically or semantically invalid (unknown key,
// unparsable value, value outside its documented domain).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// A numerical routine failed to converge or produced non-finite values.
// The message names the failing step / integral and the residual reached.
struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error(what) {}
};

// Adaptive quadrature exhausted its refinement budget.
struct QuadratureError : SolverError {
  explicit QuadratureError(const std::string& what) : SolverError(what) {}
};

}  // namespace pmel
