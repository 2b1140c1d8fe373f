#pragma once

#include <Eigen/Dense>

#include "rbrom/assembly.hpp"
#include "rbrom/reduction.hpp"

namespace rbrom {

/// Dense Kronecker product, row-major block layout: the first factor is the
/// slow index. Matches the space-fastest vectorization used throughout.
Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Greedy interpolation indices: j1 = argmax |Phi(:,1)|; each next index
/// maximizes the residual of interpolating column i at the chosen rows.
/// Ties break to the smallest index.
std::vector<int> deim_indices(const Eigen::MatrixXd& Phi);

/// Affine decomposition of a parametric vector or sparse matrix: nonzero
/// basis, interpolation slots with their reduced integration domain, and the
/// precomputed Galerkin cores.
struct HyperReduction {
  enum class Kind { vector, matrix };
  enum class Structure { steady, space_time };

  Kind kind = Kind::vector;
  Structure structure = Structure::steady;

  Eigen::MatrixXd basis1;  // Phi_z (steady) or spatial factor Phi_z1
  Eigen::MatrixXd basis2;  // temporal factor Phi_z2 (space_time only)

  std::vector<EntryTarget> targets;  // interpolation slots G (+ steps)
  Eigen::MatrixXd interp;            // Phi[G, :], square
  Eigen::PartialPivLU<Eigen::MatrixXd> interp_lu;

  std::vector<int> reduced_cells;
  std::vector<int> reduced_times;  // space_time only

  // Galerkin cores (Psi = test basis, Phi = trial basis):
  std::vector<Eigen::MatrixXd> mat_cores;  // steady: Psi^T scatter(phi_i) Phi;
                                           // space_time: spatial cores C_i1
  std::vector<Eigen::MatrixXd> temporal_weights;  // W_i2 (space_time matrix)
  Eigen::MatrixXd vec_cores;  // steady vector: Psi^T Phi_z (n x n_terms)
  Eigen::MatrixXd sv_cores;   // space_time vector: Psi1^T Phi_z1
  Eigen::MatrixXd tv_cores;   // space_time vector: Psi2^T Phi_z2

  int m1() const { return static_cast<int>(basis1.cols()); }
  int m2() const { return static_cast<int>(basis2.cols()); }
  int n_terms() const {
    return structure == Structure::steady ? m1() : m1() * m2();
  }

  void refactor();  // rebuild interp_lu from interp (after io)
};

/// DEIM pipeline for parametric vectors. Steady: POD of the (space, param)
/// snapshot matrix. The test basis supplies the cores Psi^T Phi_z.
HyperReduction hyperreduce_vector(const SnapshotTensor& snaps,
                                  const Eigen::MatrixXd& test_basis,
                                  double tol, const FESpaceDef& space);

/// Space-time variant: two-stage POD (space then time, identity norm), then
/// joint index selection on the explicitly formed Kronecker basis.
HyperReduction hyperreduce_vector(const SnapshotTensor& snaps,
                                  const Eigen::MatrixXd& test_spatial,
                                  const Eigen::MatrixXd& test_temporal,
                                  double tol, const FESpaceDef& space);

/// MDEIM pipeline for parametric sparse matrices sharing one pattern.
HyperReduction hyperreduce_matrix(const SnapshotTensor& snaps,
                                  const SparsityPattern& pattern,
                                  const Eigen::MatrixXd& trial_basis,
                                  const Eigen::MatrixXd& test_basis,
                                  double tol, const FESpaceDef& space);

HyperReduction hyperreduce_matrix(const SnapshotTensor& snaps,
                                  const SparsityPattern& pattern,
                                  const Eigen::MatrixXd& trial_spatial,
                                  const Eigen::MatrixXd& trial_temporal,
                                  const Eigen::MatrixXd& test_spatial,
                                  const Eigen::MatrixXd& test_temporal,
                                  double tol, const FESpaceDef& space);

/// Cells (and steps) that determine the entries at G; matrix kind inverts
/// slots through the pattern, vector kind treats slots as free dofs.
inline ReducedDomain reduced_domain(std::span<const EntryTarget> targets,
                                    const SparsityPattern* pattern,
                                    const FESpaceDef& space) {
  return reduced_integration_domain(targets, pattern, space);
}

/// Interpolation coefficients from the entries sampled at G.
Eigen::VectorXd online_coefficients(const HyperReduction& hr,
                                    const Eigen::VectorXd& sampled);

/// Reduced Galerkin term from the coefficients; touches only the cores.
Eigen::MatrixXd online_reduced_matrix(const HyperReduction& hr,
                                      const Eigen::VectorXd& coeffs);
Eigen::VectorXd online_reduced_vector(const HyperReduction& hr,
                                      const Eigen::VectorXd& coeffs);

}  // namespace rbrom
