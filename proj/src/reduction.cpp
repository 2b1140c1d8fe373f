#include "rbrom/reduction.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "rbrom/errors.hpp"
#include "rbrom/stats.hpp"
#include "rng_util.hpp"

namespace rbrom {

namespace {

void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index idx = 0;
    basis.col(j).cwiseAbs().maxCoeff(&idx);
    if (basis(idx, j) < 0.0) basis.col(j) = -basis.col(j);
  }
}

int truncation_rank(const Eigen::VectorXd& sv, double tol) {
  // suffix sums accumulated backwards so tiny tails survive roundoff
  const int m = static_cast<int>(sv.size());
  std::vector<double> tail(static_cast<size_t>(m) + 1, 0.0);
  for (int i = m - 1; i >= 0; --i)
    tail[static_cast<size_t>(i)] =
        tail[static_cast<size_t>(i) + 1] + sv(i) * sv(i);
  const double cut = tol * tol * tail[0];
  for (int k = 1; k <= m; ++k)
    if (tail[static_cast<size_t>(k)] <= cut) return k;
  return std::max(m, 1);
}

}  // namespace

Projection pod(const Eigen::MatrixXd& M, double tol,
               const Eigen::SparseMatrix<double>* X) {
  if (M.size() == 0 || M.norm() == 0.0)
    throw DegenerateInputError("pod: input matrix is zero");
  if (!(tol > 0.0 && tol < 1.0)) throw ArgumentError("pod: tol must lie in (0,1)");

  Projection out;
  out.tol = tol;

  Eigen::MatrixXd H;  // upper Cholesky factor, X = H^T H
  Eigen::MatrixXd HM;
  if (X != nullptr && X->size() != 0) {
    Eigen::MatrixXd Xd(*X);
    Eigen::LLT<Eigen::MatrixXd> llt(Xd);
    if (llt.info() != Eigen::Success)
      throw CholeskyError("pod: norm matrix is not SPD");
    H = llt.matrixU();
    HM = H.triangularView<Eigen::Upper>() * M;
    out.X = *X;
    mem::note(sizeof(double) * static_cast<size_t>(Xd.size() + HM.size()));
  } else {
    HM = M;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(HM, Eigen::ComputeThinU);
  out.singular_values = svd.singularValues();
  const int n = truncation_rank(out.singular_values, tol);
  out.basis = svd.matrixU().leftCols(n);
  if (H.size() != 0)
    out.basis =
        H.triangularView<Eigen::Upper>().solve(out.basis).eval();
  fix_signs(out.basis);
  mem::note(sizeof(double) * static_cast<size_t>(out.basis.size() +
                                                 out.singular_values.size()));
  return out;
}

TransientProjection space_time_pod(const SnapshotTensor& U,
                                   const Eigen::SparseMatrix<double>& X,
                                   double tol) {
  const auto U1 = U.mode1();  // checks the axis labels
  const Eigen::Index nt = U.extent(1);
  const Eigen::Index np = U.extent(2);

  Projection stage1 = pod(U1, tol, X.size() != 0 ? &X : nullptr);

  // spatial contraction, then the temporal reduction on the mode-2 reshape
  Eigen::MatrixXd contracted;
  if (X.size() != 0)
    contracted = stage1.basis.transpose() * (X * U1);
  else
    contracted = stage1.basis.transpose() * U1;
  mem::note(sizeof(double) * static_cast<size_t>(contracted.size()));

  SnapshotTensor hat = SnapshotTensor::unstack_mode1(
      {Axis::reduced, Axis::time, Axis::param}, contracted, nt, np, U.echo());
  Projection stage2 = pod(hat.mode2(), tol, nullptr);

  TransientProjection out;
  out.spatial = std::move(stage1.basis);
  out.temporal = std::move(stage2.basis);
  out.X = X;
  out.sv_spatial = std::move(stage1.singular_values);
  out.sv_temporal = std::move(stage2.singular_values);
  out.tol = tol;
  return out;
}

TransientProjection space_time_pod(const SnapshotTensor& U, double tol) {
  return space_time_pod(U, Eigen::SparseMatrix<double>(), tol);
}

Eigen::MatrixXd randomized_range(const Eigen::MatrixXd& M, int rank,
                                 int oversample, std::uint64_t seed) {
  if (rank < 1 || oversample < 0)
    throw ArgumentError("randomized_range: rank must be >= 1");
  const Eigen::Index k = rank + oversample;
  if (k > std::min(M.rows(), M.cols()))
    throw ArgumentError("randomized_range: rank + oversample exceeds dims");

  std::mt19937_64 rng(seed);
  detail::NormalGen gauss(rng);
  Eigen::MatrixXd G(M.cols(), k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < M.cols(); ++i) G(i, j) = gauss();

  const Eigen::MatrixXd Y = M * G;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
  Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), k);
  mem::note(sizeof(double) * static_cast<size_t>(G.size() + Q.size()));
  return Q;
}

Eigen::VectorXd galerkin_coords(const Projection& proj,
                                const Eigen::VectorXd& w) {
  if (w.size() != proj.basis.rows())
    throw ShapeError("galerkin_coords: vector length mismatch");
  if (proj.identity_norm()) return proj.basis.transpose() * w;
  return proj.basis.transpose() * (proj.X * w);
}

Eigen::MatrixXd galerkin_coords(const Projection& proj,
                                const Eigen::MatrixXd& W) {
  if (W.rows() != proj.basis.rows())
    throw ShapeError("galerkin_coords: row count mismatch");
  if (proj.identity_norm()) return proj.basis.transpose() * W;
  return proj.basis.transpose() * (proj.X * W);
}

Eigen::VectorXd galerkin_coords(const TransientProjection& proj,
                                const Eigen::VectorXd& w) {
  const Eigen::Index N = proj.spatial.rows();
  const Eigen::Index nt = proj.temporal.rows();
  if (w.size() != N * nt)
    throw ShapeError("galerkin_coords: expected a space-time vector");
  Eigen::Map<const Eigen::MatrixXd> W(w.data(), N, nt);
  Eigen::MatrixXd What;
  if (proj.X.size() != 0)
    What = proj.spatial.transpose() * (proj.X * W) * proj.temporal;
  else
    What = proj.spatial.transpose() * W * proj.temporal;
  return Eigen::Map<const Eigen::VectorXd>(What.data(), What.size());
}

Eigen::VectorXd st_expand(const TransientProjection& proj,
                          const Eigen::VectorXd& coords) {
  if (coords.size() != proj.n())
    throw ShapeError("st_expand: coordinate length mismatch");
  Eigen::Map<const Eigen::MatrixXd> What(coords.data(), proj.n1(), proj.n2());
  const Eigen::MatrixXd W = proj.spatial * What * proj.temporal.transpose();
  return Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
}

}  // namespace rbrom
