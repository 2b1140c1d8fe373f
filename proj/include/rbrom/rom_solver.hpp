#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rbrom/fom_solver.hpp"
#include "rbrom/hyper_reduction.hpp"

namespace rbrom {

struct ReductionConfig {
  double tol = 1e-4;
  int nparams = 20;
  int nparams_res = 20;
  int nparams_jac = 1;
  InnerProduct inner = InnerProduct::h10;
  SolverConfig solver;  // FOM settings used for snapshot collection
};

/// Pairs the FE space with a reduced basis so reduced coordinates can be
/// expanded back into FE functions.
struct RBSpace {
  std::shared_ptr<const FESpaceDef> fe_space;
  Projection projection;
};

/// Everything the compatibility check compares when an operator is loaded
/// against a problem/config pair.
struct OperatorEcho {
  int dim = 0;
  std::array<int, 2> cells{0, 0};
  std::array<double, 4> domain{0, 0, 0, 0};
  int dirichlet = 0;
  bool transient = false;
  bool has_mass = false, has_load = false, has_reaction = false;
  double t0 = 0.0, dt = 0.0;
  int nsteps = 0;
  double theta = 1.0;
  double tol = 0.0;
  int nparams = 0, nparams_res = 0, nparams_jac = 0;
  std::uint32_t sampling = 0;
  std::uint64_t seed = 0;
  std::uint32_t inner = 0;
  Eigen::MatrixXd pdomain;  // 2 x p

  bool operator==(const OperatorEcho& o) const;
};

OperatorEcho make_echo(const ProblemDef& problem, const ReductionConfig& cfg,
                       const Realization& offline);

/// Offline product: reduced bases, hyper-reductions of the residual and
/// Jacobian forms, the exactly projected transient blocks, and the prepared
/// reduced-integration-domain samplers.
struct ReducedOperator {
  std::shared_ptr<const ProblemDef> problem;
  bool transient = false;

  Projection trial;                // steady basis
  TransientProjection st_trial;    // transient pair
  Eigen::MatrixXd test_basis;      // spatial Psi; equals trial by default
  bool petrov_galerkin = false;

  HyperReduction res_hr;
  HyperReduction jac_hr;

  // transient exact blocks of the space-time system
  Eigen::MatrixXd Mhat;    // Phi1^T M Phi1
  Eigen::MatrixXd That0;   // Phi2^T Phi2
  Eigen::MatrixXd That1;   // Phi2^T L Phi2 (sub-diagonal shift)
  Eigen::MatrixXd MtPhi1;  // M^T Phi1, for the initial-condition block
  double dt = 0.0;

  OperatorEcho echo;

  // online samplers over the reduced integration domains (not serialized)
  std::unique_ptr<RestrictedSampler> res_sampler;
  std::unique_ptr<RestrictedSampler> jac_sampler;

  int n() const { return transient ? st_trial.n() : trial.n(); }
  int n1() const { return transient ? st_trial.n1() : trial.n(); }
  int n2() const { return transient ? st_trial.n2() : 1; }

  /// Builds the samplers; called at the end of the offline build and after
  /// loading from a file.
  void prepare();
};

/// Offline pipeline: snapshots, basis, hyper-reductions, exact blocks.
/// When `out_snapshots` is given the collected solution snapshots (and FOM
/// statistics) are handed back for archiving.
ReducedOperator build_reduced_operator(const ReductionConfig& cfg,
                                       std::shared_ptr<const ProblemDef> problem,
                                       const Realization& offline,
                                       Collected* out_snapshots = nullptr);

struct OnlineResult {
  SnapshotTensor coords;  // (reduced, param)
  RunStats stats;
};

/// Hyper-reduced online solve: one reduced solve per parameter for linear
/// problems, a reduced Newton loop otherwise; transient problems solve the
/// space-time system in one shot. Touches no array of length N except the
/// reduced-domain assembly (and the initial-condition projection when the
/// initial datum is nonzero).
OnlineResult online_solve(const ReducedOperator& rbop, const Realization& r,
                          double eps = 1e-10, int max_iter = 25);

struct Reconstruction {
  SnapshotTensor free_field;  // (space[, time], param)
  Eigen::MatrixXd dirichlet;  // boundary values, batch columns time-fastest
};

Reconstruction reconstruct(const ReducedOperator& rbop,
                           const SnapshotTensor& coords, const Realization& r);

/// Operator file `RBOP`: magic, version, JSON manifest, named f64 tensor
/// sections in the RBSN payload encoding. save/load round trips bitwise.
void save_operator(const std::string& path, const ReducedOperator& rbop,
                   const std::string& extra_manifest_json = "");
std::string peek_operator_manifest(const std::string& path);
ReducedOperator load_operator(const std::string& path,
                              std::shared_ptr<const ProblemDef> problem,
                              const OperatorEcho& expected);

}  // namespace rbrom
