#include "rbrom/hyper_reduction.hpp"

#include "rbrom/batched_sparse.hpp"
#include "rbrom/stats.hpp"

namespace rbrom {

Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

std::vector<int> deim_indices(const Eigen::MatrixXd& Phi) {
  const int n = static_cast<int>(Phi.cols());
  if (n < 1) throw ArgumentError("deim_indices: empty basis");
  if (Phi.rows() < Phi.cols())
    throw ArgumentError("deim_indices: basis needs at least n rows");

  std::vector<int> G;
  G.reserve(static_cast<size_t>(n));
  Eigen::Index j0 = 0;
  const double m0 = Phi.col(0).cwiseAbs().maxCoeff(&j0);
  if (m0 == 0.0) throw RankDeficiencyError("deim_indices: zero column", 1);
  G.push_back(static_cast<int>(j0));

  for (int i = 1; i < n; ++i) {
    Eigen::MatrixXd A(i, i);
    Eigen::VectorXd rhs(i);
    for (int r = 0; r < i; ++r) {
      for (int c = 0; c < i; ++c) A(r, c) = Phi(G[static_cast<size_t>(r)], c);
      rhs(r) = Phi(G[static_cast<size_t>(r)], i);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
      throw RankDeficiencyError("deim_indices: singular interpolation system",
                                i + 1);
    const Eigen::VectorXd c = lu.solve(rhs);
    const Eigen::VectorXd r = Phi.col(i) - Phi.leftCols(i) * c;
    Eigen::Index ji = 0;
    const double mi = r.cwiseAbs().maxCoeff(&ji);
    if (mi == 0.0)
      throw RankDeficiencyError("deim_indices: dependent column", i + 1);
    G.push_back(static_cast<int>(ji));
  }
  return G;
}

void HyperReduction::refactor() {
  interp_lu.compute(interp);
  mem::note(sizeof(double) * static_cast<size_t>(interp.size()));
}

namespace {

// kron basis of the separable nonzero factors, column (i1 + m1*i2) =
// kron(basis2.col(i2), basis1.col(i1)); row index is slot + Nz*step0.
Eigen::MatrixXd kron_basis(const Eigen::MatrixXd& b1,
                           const Eigen::MatrixXd& b2) {
  const Eigen::Index nz = b1.rows(), nt = b2.rows();
  const Eigen::Index m1 = b1.cols(), m2 = b2.cols();
  Eigen::MatrixXd K(nz * nt, m1 * m2);
  for (Eigen::Index i2 = 0; i2 < m2; ++i2)
    for (Eigen::Index i1 = 0; i1 < m1; ++i1)
      for (Eigen::Index s = 0; s < nt; ++s)
        K.block(s * nz, i1 + m1 * i2, nz, 1) = b1.col(i1) * b2(s, i2);
  mem::note(sizeof(double) * static_cast<size_t>(K.size()));
  return K;
}

void select_targets(HyperReduction& hr, const Eigen::MatrixXd& basis,
                    Eigen::Index rows_per_step) {
  const std::vector<int> G = deim_indices(basis);
  hr.targets.clear();
  for (int g : G) {
    EntryTarget t;
    t.slot = static_cast<int>(g % rows_per_step);
    t.step = hr.structure == HyperReduction::Structure::space_time
                 ? static_cast<int>(g / rows_per_step) + 1
                 : 0;
    hr.targets.push_back(t);
  }
  hr.interp.resize(static_cast<Eigen::Index>(G.size()),
                   static_cast<Eigen::Index>(G.size()));
  for (size_t r = 0; r < G.size(); ++r)
    hr.interp.row(static_cast<Eigen::Index>(r)) =
        basis.row(G[r]);
  hr.refactor();
}

void attach_domain(HyperReduction& hr, const SparsityPattern* pattern,
                   const FESpaceDef& space) {
  const ReducedDomain dom =
      reduced_integration_domain(hr.targets, pattern, space);
  hr.reduced_cells = dom.cells;
  hr.reduced_times = dom.time_steps;
}

}  // namespace

HyperReduction hyperreduce_vector(const SnapshotTensor& snaps,
                                  const Eigen::MatrixXd& test_basis,
                                  double tol, const FESpaceDef& space) {
  if (snaps.ndims() != 2 || snaps.axes()[0] != Axis::space)
    throw ShapeError("steady vector snapshots need axes (space, param)");
  const Eigen::MatrixXd Z = snaps.as_matrix();
  Projection proj = pod(Z, tol, nullptr);

  HyperReduction hr;
  hr.kind = HyperReduction::Kind::vector;
  hr.structure = HyperReduction::Structure::steady;
  hr.basis1 = std::move(proj.basis);
  select_targets(hr, hr.basis1, hr.basis1.rows());
  attach_domain(hr, nullptr, space);
  hr.vec_cores = test_basis.transpose() * hr.basis1;
  return hr;
}

HyperReduction hyperreduce_vector(const SnapshotTensor& snaps,
                                  const Eigen::MatrixXd& test_spatial,
                                  const Eigen::MatrixXd& test_temporal,
                                  double tol, const FESpaceDef& space) {
  if (snaps.ndims() != 3 || snaps.axes()[0] != Axis::space)
    throw ShapeError("space-time vector snapshots need axes (space, time, param)");
  TransientProjection zproj = space_time_pod(snaps, tol);

  HyperReduction hr;
  hr.kind = HyperReduction::Kind::vector;
  hr.structure = HyperReduction::Structure::space_time;
  hr.basis1 = std::move(zproj.spatial);
  hr.basis2 = std::move(zproj.temporal);
  select_targets(hr, kron_basis(hr.basis1, hr.basis2), hr.basis1.rows());
  attach_domain(hr, nullptr, space);
  hr.sv_cores = test_spatial.transpose() * hr.basis1;
  hr.tv_cores = test_temporal.transpose() * hr.basis2;
  return hr;
}

HyperReduction hyperreduce_matrix(const SnapshotTensor& snaps,
                                  const SparsityPattern& pattern,
                                  const Eigen::MatrixXd& trial_basis,
                                  const Eigen::MatrixXd& test_basis,
                                  double tol, const FESpaceDef& space) {
  if (snaps.ndims() != 2 || snaps.axes()[0] != Axis::space_nnz)
    throw ShapeError("matrix snapshots need axes (space_nnz, param)");
  if (snaps.extent(0) != pattern.nnz())
    throw SparsityError("snapshot rows do not match the pattern nnz");
  const Eigen::MatrixXd Z = snaps.as_matrix();
  Projection proj = pod(Z, tol, nullptr);

  HyperReduction hr;
  hr.kind = HyperReduction::Kind::matrix;
  hr.structure = HyperReduction::Structure::steady;
  hr.basis1 = std::move(proj.basis);
  select_targets(hr, hr.basis1, hr.basis1.rows());
  attach_domain(hr, &pattern, space);
  for (int i = 0; i < hr.m1(); ++i) {
    const Eigen::SparseMatrix<double> S = scatter_nnz(pattern, hr.basis1.col(i));
    hr.mat_cores.push_back(test_basis.transpose() * S * trial_basis);
  }
  return hr;
}

HyperReduction hyperreduce_matrix(const SnapshotTensor& snaps,
                                  const SparsityPattern& pattern,
                                  const Eigen::MatrixXd& trial_spatial,
                                  const Eigen::MatrixXd& trial_temporal,
                                  const Eigen::MatrixXd& test_spatial,
                                  const Eigen::MatrixXd& test_temporal,
                                  double tol, const FESpaceDef& space) {
  if (snaps.ndims() != 3 || snaps.axes()[0] != Axis::space_nnz)
    throw ShapeError("matrix trajectories need axes (space_nnz, time, param)");
  if (snaps.extent(0) != pattern.nnz())
    throw SparsityError("snapshot rows do not match the pattern nnz");
  TransientProjection zproj = space_time_pod(snaps, tol);

  HyperReduction hr;
  hr.kind = HyperReduction::Kind::matrix;
  hr.structure = HyperReduction::Structure::space_time;
  hr.basis1 = std::move(zproj.spatial);
  hr.basis2 = std::move(zproj.temporal);
  select_targets(hr, kron_basis(hr.basis1, hr.basis2), hr.basis1.rows());
  attach_domain(hr, &pattern, space);
  for (int i1 = 0; i1 < hr.m1(); ++i1) {
    const Eigen::SparseMatrix<double> S =
        scatter_nnz(pattern, hr.basis1.col(i1));
    hr.mat_cores.push_back(test_spatial.transpose() * S * trial_spatial);
  }
  for (int i2 = 0; i2 < hr.m2(); ++i2)
    hr.temporal_weights.push_back(test_temporal.transpose() *
                                  hr.basis2.col(i2).asDiagonal() *
                                  trial_temporal);
  return hr;
}

Eigen::VectorXd online_coefficients(const HyperReduction& hr,
                                    const Eigen::VectorXd& sampled) {
  if (sampled.size() != static_cast<Eigen::Index>(hr.targets.size()))
    throw ShapeError("online_coefficients: sampled length != |G|");
  return hr.interp_lu.solve(sampled);
}

Eigen::MatrixXd online_reduced_matrix(const HyperReduction& hr,
                                      const Eigen::VectorXd& coeffs) {
  if (hr.kind != HyperReduction::Kind::matrix)
    throw ArgumentError("online_reduced_matrix needs a matrix hyper-reduction");
  if (coeffs.size() != hr.n_terms())
    throw ShapeError("coefficient count mismatch");
  if (hr.structure == HyperReduction::Structure::steady) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(hr.mat_cores.front().rows(),
                                                hr.mat_cores.front().cols());
    for (int i = 0; i < hr.n_terms(); ++i)
      out += coeffs(i) * hr.mat_cores[static_cast<size_t>(i)];
    return out;
  }
  const int n1 = static_cast<int>(hr.mat_cores.front().rows());
  const int n2 = static_cast<int>(hr.temporal_weights.front().rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n1 * n2, n1 * n2);
  for (int i2 = 0; i2 < hr.m2(); ++i2)
    for (int i1 = 0; i1 < hr.m1(); ++i1)
      out += coeffs(i1 + hr.m1() * i2) *
             kron_dense(hr.temporal_weights[static_cast<size_t>(i2)],
                        hr.mat_cores[static_cast<size_t>(i1)]);
  return out;
}

Eigen::VectorXd online_reduced_vector(const HyperReduction& hr,
                                      const Eigen::VectorXd& coeffs) {
  if (hr.kind != HyperReduction::Kind::vector)
    throw ArgumentError("online_reduced_vector needs a vector hyper-reduction");
  if (coeffs.size() != hr.n_terms())
    throw ShapeError("coefficient count mismatch");
  if (hr.structure == HyperReduction::Structure::steady)
    return hr.vec_cores * coeffs;
  Eigen::Map<const Eigen::MatrixXd> Chat(coeffs.data(), hr.m1(), hr.m2());
  const Eigen::MatrixXd R = hr.sv_cores * Chat * hr.tv_cores.transpose();
  return Eigen::Map<const Eigen::VectorXd>(R.data(), R.size());
}

}  // namespace rbrom
