#pragma once

#include <optional>
#include <string>

#include "rbrom/rom_solver.hpp"

namespace rbrom {

/// Validated run configuration; parsed from strict JSON (unknown keys are
/// rejected).
struct RunConfig {
  std::string problem;  // poisson2d | heat2d | nonlinear_reaction2d
  std::vector<double> domain;
  std::vector<int> cells;
  std::vector<std::pair<double, double>> pdomain;
  bool has_tdomain = false;
  double t0 = 0.0, dt = 0.0;
  int nsteps = 0;
  double theta = 1.0;
  double tol = 1e-4;
  int nparams = 20;
  int nparams_res = 20;
  int nparams_jac = 1;
  Sampling sampling = Sampling::halton;
  std::uint64_t seed = 0;
  InnerProduct inner = InnerProduct::h10;
  double newton_eps = 1e-10;
  int newton_max_iter = 25;
  std::string out;  // optional default output directory

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  std::string to_json_text() const;
};

/// A registry problem together with its parameter domain.
struct ProblemBundle {
  std::shared_ptr<const ProblemDef> problem;
  std::optional<ParamSpace> pspace;
  std::optional<TransientParamSpace> tspace;

  Realization sample(int nparams, Sampling strategy, std::uint64_t seed) const;
};

/// Instantiates one of the built-in problems from a validated config.
ProblemBundle build_problem(const RunConfig& cfg);

ReductionConfig reduction_config(const RunConfig& cfg);

}  // namespace rbrom
