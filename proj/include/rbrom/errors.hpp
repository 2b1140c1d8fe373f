#pragma once

#include <stdexcept>
#include <string>

namespace rbrom {

// Configuration and argument problems map to CLI exit code 2, everything
// else (compute, io) to exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SparsityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CholeskyError : SolveError {
  using SolveError::SolveError;
};
struct NonConvergenceError : SolveError {
  NonConvergenceError(const std::string& what, double residual_norm)
      : SolveError(what), last_residual(residual_norm) {}
  double last_residual;
};
struct RankDeficiencyError : SolveError {
  RankDeficiencyError(const std::string& what, int col)
      : SolveError(what), column(col) {}
  int column;
};

// NotFound is distinct from Format so drivers can fall back to an offline
// rebuild when the operator file is simply absent.
struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CompatibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rbrom
