#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rbrom/snapshots.hpp"

namespace rbrom {

/// Reduced basis with X-orthonormal columns (empty X means identity) and the
/// full singular-value ladder of the decomposition that produced it.
struct Projection {
  Eigen::MatrixXd basis;          // N x n
  Eigen::SparseMatrix<double> X;  // size 0 => identity norm
  Eigen::VectorXd singular_values;
  double tol = 0.0;

  int n() const { return static_cast<int>(basis.cols()); }
  bool identity_norm() const { return X.size() == 0; }
};

/// Kronecker space-time basis Phi = kron(temporal, spatial) under the
/// space-fastest vectorization; spatial factor X-orthonormal, temporal
/// factor l2-orthonormal.
struct TransientProjection {
  Eigen::MatrixXd spatial;   // N x n1
  Eigen::MatrixXd temporal;  // Nt x n2
  Eigen::SparseMatrix<double> X;
  Eigen::VectorXd sv_spatial, sv_temporal;
  double tol = 0.0;

  int n1() const { return static_cast<int>(spatial.cols()); }
  int n2() const { return static_cast<int>(temporal.cols()); }
  int n() const { return n1() * n2(); }
};

/// Tolerance-truncated POD. Retains the smallest n with
/// sqrt(sum_{i>n} s_i^2) <= tol * sqrt(sum s_i^2), computed on H*M where
/// X = H^T H (H the upper Cholesky factor); the returned basis H^{-1}*U_n is
/// X-orthonormal. Each column's largest-magnitude entry is made positive.
Projection pod(const Eigen::MatrixXd& M, double tol,
               const Eigen::SparseMatrix<double>* X = nullptr);

/// Two-stage space-time reduction: weighted spatial POD of the mode-1
/// reshape, spatial contraction, then an l2 temporal POD of the mode-2
/// reshape.
TransientProjection space_time_pod(const SnapshotTensor& U,
                                   const Eigen::SparseMatrix<double>& X,
                                   double tol);
// unweighted variant (X = identity), used for residual/Jacobian manifolds
TransientProjection space_time_pod(const SnapshotTensor& U, double tol);

/// Randomized range finder: orthonormal Q spanning an approximate range of
/// M, from a seeded dense Gaussian sketch of rank + oversample columns.
Eigen::MatrixXd randomized_range(const Eigen::MatrixXd& M, int rank,
                                 int oversample, std::uint64_t seed);

/// Reduced coordinates of a full-order vector: Phi^T X w.
Eigen::VectorXd galerkin_coords(const Projection& proj,
                                const Eigen::VectorXd& w);
Eigen::MatrixXd galerkin_coords(const Projection& proj,
                                const Eigen::MatrixXd& W);
// space-time: w of length N*Nt, coordinates of length n1*n2 (n1 fastest)
Eigen::VectorXd galerkin_coords(const TransientProjection& proj,
                                const Eigen::VectorXd& w);

/// Factor-wise Kronecker action: expands space-time coordinates back to a
/// vector of length N*Nt without materializing kron(temporal, spatial).
Eigen::VectorXd st_expand(const TransientProjection& proj,
                          const Eigen::VectorXd& coords);

}  // namespace rbrom
