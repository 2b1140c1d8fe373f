#pragma once

#include <functional>

#include "rbrom/assembly.hpp"
#include "rbrom/snapshots.hpp"
#include "rbrom/stats.hpp"

namespace rbrom {

struct SolverConfig {
  double theta = 1.0;
  double eps = 1e-10;
  int max_iter = 25;
};

/// Observers called at each Newton iterate (before the update); used to
/// record residual / Jacobian-nonzero snapshots for hyper-reduction.
struct NewtonHooks {
  std::function<void(int param, const Eigen::VectorXd& residual)> on_residual;
  std::function<void(int param, const Eigen::VectorXd& jac_nnz)> on_jacobian;
};

/// Boundary values g(mu [, t], x) at the Dirichlet dofs, one column per
/// batch point.
BatchedVector interpolate_dirichlet(const ParamCoeff& g, const BatchPlan& plan,
                                    const FESpaceDef& space);

/// Nodal values of the initial condition at the free dofs, per parameter.
Eigen::MatrixXd interpolate_initial(const ProblemDef& problem,
                                    const Realization& r);

struct SteadyResult {
  BatchedVector solution;  // free dofs x nparams
  RunStats stats;
};

SteadyResult fom_solve_steady(const ProblemDef& problem, const Realization& r,
                              double eps, int max_iter,
                              const NewtonHooks& hooks = {});

struct TransientResult {
  SnapshotTensor trajectory;  // (space, time, param), steps 1..Nt
  RunStats stats;
};

/// Theta-method marching; theta = 1 is Backward Euler, theta = 0.5 the
/// midpoint rule. Linear transient problems only.
TransientResult fom_solve_transient(const ProblemDef& problem,
                                    const Realization& r, double theta,
                                    double eps, int max_iter);

struct Collected {
  SnapshotTensor solutions;
  RunStats stats;
  SnapshotTensor residuals;  // empty unless requested
  SnapshotTensor jacobians;  // nonzero values, empty unless requested
  bool has_residuals = false;
  bool has_jacobians = false;
};

/// Runs the FOM over the realization and shapes the solutions into a
/// snapshot tensor; optionally records residual / Jacobian snapshots for the
/// first record_res / record_jac parameters.
Collected collect_snapshots(const ProblemDef& problem, const SolverConfig& cfg,
                            const Realization& r, int record_res = 0,
                            int record_jac = 0);

/// Residual of the space-time block system at the zero trajectory: Dirichlet
/// lifting plus load, per (step, parameter). The initial-condition block is
/// excluded; the reduced operator applies it exactly.
SnapshotTensor transient_residual_at_zero(const ProblemDef& problem,
                                          const Realization& r);

/// Stiffness nonzero trajectories (space_nnz, time, param).
SnapshotTensor transient_jacobian_nnz(const ProblemDef& problem,
                                      const Realization& r);

enum class InnerProduct { h10, l2, h1 };
InnerProduct inner_product_from_string(const std::string& name);
std::string to_string(InnerProduct ip);

/// Discrete inner product on the free dofs: h10 = stiffness, l2 = mass,
/// h1 = stiffness + mass, all with unit coefficient.
Eigen::SparseMatrix<double> inner_product_matrix(const FESpaceDef& space,
                                                 InnerProduct ip);

}  // namespace rbrom
