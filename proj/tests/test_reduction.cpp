#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/SVD>
#include <random>

#include "doctest.h"
#include "rbrom/fom_solver.hpp"
#include "rbrom/hyper_reduction.hpp"
#include "rbrom/reduction.hpp"

using namespace rbrom;

namespace {

Eigen::MatrixXd seeded_random(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  return m;
}

Eigen::SparseMatrix<double> h1_matrix(int cells) {
  const FESpaceDef space(build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                                    std::array<int, 2>{cells, cells}),
                         DirichletTag::boundary);
  return inner_product_matrix(space, InnerProduct::h1);
}

double xnorm(const Eigen::SparseMatrix<double>& X, const Eigen::VectorXd& v) {
  return std::sqrt(v.dot(X * v));
}

// independent truncation-rank oracle from a full Jacobi SVD
int truncation_oracle(const Eigen::VectorXd& sv, double tol) {
  const double total = sv.squaredNorm();
  for (int k = 1; k <= sv.size(); ++k) {
    double tail = 0.0;
    for (int i = k; i < sv.size(); ++i) tail += sv(i) * sv(i);
    if (std::sqrt(tail) <= tol * std::sqrt(total)) return k;
  }
  return static_cast<int>(sv.size());
}

SnapshotTensor heat_snapshots(int cells, int nsteps, int nparams) {
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                 std::array<int, 2>{cells, cells}),
      DirichletTag::boundary);
  problem->transient = true;
  problem->stiffness =
      WeakFormKernel(KernelKind::stiffness, constant_coeff(1.0), 2, false, false);
  problem->mass =
      WeakFormKernel(KernelKind::mass, constant_coeff(1.0), 2, false, false);
  problem->load = WeakFormKernel(
      KernelKind::load,
      [](std::span<const double> mu, double t, const std::array<double, 2>&) {
        return -2.0 * t * (mu[0] + mu[1]);
      },
      2, true, true);
  problem->dirichlet_g = [](std::span<const double> mu, double t,
                            const std::array<double, 2>& x) {
    return t * (mu[0] * x[0] * x[0] + mu[1] * x[1] * x[1]);
  };
  problem->initial_u0 = constant_coeff(0.0);

  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  std::vector<double> grid;
  for (int n = 0; n <= nsteps; ++n) grid.push_back(0.01 * n);
  const Realization r = sample_realization(TransientParamSpace(box, grid),
                                           nparams, Sampling::halton, 0);
  return fom_solve_transient(*problem, r, 1.0, 1e-12, 10).trajectory;
}

}  // namespace

TEST_CASE("pod of a rank-1 matrix returns the normalized column") {
  Eigen::VectorXd u(4);
  u << 1.0, -2.0, 0.5, 3.0;
  Eigen::VectorXd v(3);
  v << 2.0, -1.0, 4.0;
  const Eigen::MatrixXd M = u * v.transpose();
  const Projection proj = pod(M, 1e-8);
  REQUIRE(proj.n() == 1);
  // sign rule: the largest-magnitude entry of the column is positive
  Eigen::VectorXd expected = u / u.norm();
  if (expected(3) < 0) expected = -expected;
  CHECK((proj.basis.col(0) - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pod truncation: singular values (1, 1e-8) keep one mode at 1e-4") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(6, 2);
  M(0, 0) = 1.0;
  M(1, 1) = 1e-8;
  const Projection proj = pod(M, 1e-4);
  CHECK(proj.n() == 1);
  // the tail rule keeps both modes when the tolerance drops below the tail
  CHECK(pod(M, 1e-9).n() == 2);
}

TEST_CASE("weighted pod: X-orthonormal basis and tol-level reconstruction") {
  const Eigen::SparseMatrix<double> X = h1_matrix(7);  // 36 free dofs
  const Eigen::Index N = X.rows();
  const Eigen::MatrixXd M = seeded_random(N, 25, 7);
  const double tol = 1e-6;
  const Projection proj = pod(M, tol, &X);

  const Eigen::MatrixXd gram =
      proj.basis.transpose() * X * proj.basis -
      Eigen::MatrixXd::Identity(proj.n(), proj.n());
  CHECK(gram.cwiseAbs().maxCoeff() <= 1e-10);

  // X-norm reconstruction error within tol (up to roundoff slack)
  const Eigen::MatrixXd R = M - proj.basis * (proj.basis.transpose() * (X * M));
  double err2 = 0.0, ref2 = 0.0;
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    err2 += R.col(j).dot(X * R.col(j));
    ref2 += M.col(j).dot(X * M.col(j));
  }
  CHECK(std::sqrt(err2) <= tol * std::sqrt(ref2) * (1.0 + 1e-6));

  // dense SVD oracle on H*M: same singular values and rank
  const Eigen::MatrixXd Xd(X);
  const Eigen::LLT<Eigen::MatrixXd> llt(Xd);
  const Eigen::MatrixXd HM =
      Eigen::MatrixXd(llt.matrixU()) * M;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(HM);
  CHECK((proj.singular_values - svd.singularValues()).cwiseAbs().maxCoeff() <=
        1e-10 * svd.singularValues()(0));
  CHECK(proj.n() == truncation_oracle(svd.singularValues(), tol));
}

TEST_CASE("pod with identity norm agrees with the dense SVD oracle") {
  for (const auto [rows, cols] : {std::pair{16, 9}, {64, 64}, {12, 40}}) {
    const Eigen::MatrixXd M = seeded_random(rows, cols, 1000 + rows);
    const Projection proj = pod(M, 1e-3);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    CHECK((proj.singular_values - svd.singularValues()).cwiseAbs().maxCoeff() <=
          1e-10 * svd.singularValues()(0));
  }
}

TEST_CASE("pod retained rank is monotone in the tolerance") {
  const Eigen::MatrixXd M = seeded_random(30, 12, 3);
  int prev = 0;
  for (double tol : {1e-1, 1e-3, 1e-6, 1e-10}) {  // tightening
    const int n = pod(M, tol).n();
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("pod input validation") {
  CHECK_THROWS_AS(pod(Eigen::MatrixXd::Zero(4, 3), 1e-4),
                  DegenerateInputError);
  CHECK_THROWS_AS(pod(Eigen::MatrixXd::Ones(4, 3), 0.0), ArgumentError);
  CHECK_THROWS_AS(pod(Eigen::MatrixXd::Ones(4, 3), 1.5), ArgumentError);
  // non-SPD norm matrix: indefinite diagonal
  Eigen::SparseMatrix<double> X(3, 3);
  X.insert(0, 0) = 1.0;
  X.insert(1, 1) = -1.0;
  X.insert(2, 2) = 1.0;
  X.makeCompressed();
  const Eigen::MatrixXd M = seeded_random(3, 2, 5);
  CHECK_THROWS_AS(pod(M, 1e-4, &X), CholeskyError);
}

TEST_CASE("space-time pod of separable snapshots is rank (1,1)") {
  const Eigen::Index N = 9, nt = 5, np = 3;
  Eigen::VectorXd a = seeded_random(N, 1, 21);
  Eigen::VectorXd b = seeded_random(nt, 1, 22);
  Eigen::VectorXd data(N * nt * np);
  for (Eigen::Index k = 0; k < np; ++k)
    for (Eigen::Index j = 0; j < nt; ++j)
      for (Eigen::Index i = 0; i < N; ++i)
        data(i + N * (j + nt * k)) = a(i) * b(j);
  const SnapshotTensor U({Axis::space, Axis::time, Axis::param}, {N, nt, np},
                         data);
  const TransientProjection tp = space_time_pod(U, 1e-8);
  CHECK(tp.n1() == 1);
  CHECK(tp.n2() == 1);

  // kron(temporal, spatial) spans vec(a b^T)
  const Eigen::MatrixXd K = kron_dense(tp.temporal, tp.spatial);
  Eigen::Map<const Eigen::VectorXd> w(data.data(), N * nt);
  const Eigen::VectorXd res = w - K * (K.transpose() * w);
  CHECK(res.norm() <= 1e-10 * w.norm());
}

TEST_CASE("space-time pod invariants on heat snapshots") {
  const SnapshotTensor U = heat_snapshots(6, 6, 8);
  const FESpaceDef space(build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                                    std::array<int, 2>{6, 6}),
                         DirichletTag::boundary);
  const Eigen::SparseMatrix<double> X =
      inner_product_matrix(space, InnerProduct::h10);

  for (const double tol : {1e-2, 1e-4}) {
    const TransientProjection tp = space_time_pod(U, X, tol);

    // X-orthonormal in space, l2-orthonormal in time
    const Eigen::MatrixXd g1 =
        tp.spatial.transpose() * X * tp.spatial -
        Eigen::MatrixXd::Identity(tp.n1(), tp.n1());
    const Eigen::MatrixXd g2 =
        tp.temporal.transpose() * tp.temporal -
        Eigen::MatrixXd::Identity(tp.n2(), tp.n2());
    CHECK(g1.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(g2.cwiseAbs().maxCoeff() <= 1e-10);

    // line-7 identity Phi1^T X U1 = Phi1t^T H U1, via an independent Cholesky
    const Eigen::MatrixXd Xd(X);
    const Eigen::LLT<Eigen::MatrixXd> llt(Xd);
    const Eigen::MatrixXd H = llt.matrixU();
    const Eigen::MatrixXd lhs = tp.spatial.transpose() * (X * U.mode1());
    const Eigen::MatrixXd rhs = (H * tp.spatial).transpose() * (H * U.mode1());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + lhs.cwiseAbs().maxCoeff()));

    // training-set reconstruction in the space-time X norm within 2*tol,
    // against an explicit Kronecker oracle
    const Eigen::MatrixXd K = kron_dense(tp.temporal, tp.spatial);
    const Eigen::Index N = U.extent(0), nt = U.extent(1), np = U.extent(2);
    Eigen::SparseMatrix<double> Ist(nt, nt);
    Ist.setIdentity();
    double err2 = 0.0, ref2 = 0.0;
    for (Eigen::Index k = 0; k < np; ++k) {
      Eigen::Map<const Eigen::VectorXd> w(U.data().data() + k * N * nt, N * nt);
      Eigen::VectorXd coords(tp.n());
      // coordinates through the factorized projection
      Eigen::Map<const Eigen::MatrixXd> W(w.data(), N, nt);
      const Eigen::MatrixXd What =
          tp.spatial.transpose() * (X * W) * tp.temporal;
      coords = Eigen::Map<const Eigen::VectorXd>(What.data(), What.size());
      const Eigen::VectorXd recon = K * coords;
      const Eigen::VectorXd diff = w - recon;
      Eigen::Map<const Eigen::MatrixXd> D(diff.data(), N, nt);
      Eigen::Map<const Eigen::MatrixXd> Wm(w.data(), N, nt);
      for (Eigen::Index j = 0; j < nt; ++j) {
        err2 += D.col(j).dot(X * D.col(j));
        ref2 += Wm.col(j).dot(X * Wm.col(j));
      }
    }
    CHECK(std::sqrt(err2) <= 2.0 * tol * std::sqrt(ref2));
  }
}

TEST_CASE("space-time pod stage 1 is invariant to parameter permutation") {
  const SnapshotTensor U = heat_snapshots(5, 5, 6);
  const Eigen::Index N = U.extent(0), nt = U.extent(1), np = U.extent(2);
  // permute the parameter axis
  Eigen::VectorXd permuted(U.size());
  std::vector<Eigen::Index> perm = {3, 0, 5, 1, 4, 2};
  for (Eigen::Index k = 0; k < np; ++k)
    permuted.segment(k * N * nt, N * nt) =
        U.data().segment(perm[static_cast<size_t>(k)] * N * nt, N * nt);
  const SnapshotTensor V({Axis::space, Axis::time, Axis::param}, {N, nt, np},
                         permuted);

  const FESpaceDef space(build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                                    std::array<int, 2>{5, 5}),
                         DirichletTag::boundary);
  const Eigen::SparseMatrix<double> X =
      inner_product_matrix(space, InnerProduct::h10);
  const TransientProjection a = space_time_pod(U, X, 1e-6);
  const TransientProjection b = space_time_pod(V, X, 1e-6);
  REQUIRE(a.n1() == b.n1());
  for (int j = 0; j < a.n1(); ++j) {
    const double same = (a.spatial.col(j) - b.spatial.col(j)).norm();
    const double flip = (a.spatial.col(j) + b.spatial.col(j)).norm();
    CHECK(std::min(same, flip) <= 1e-8 * a.spatial.col(j).norm());
  }
}

TEST_CASE("randomized range finder") {
  // exact rank-3 capture
  const Eigen::MatrixXd A = seeded_random(40, 3, 31);
  const Eigen::MatrixXd B = seeded_random(3, 25, 32);
  const Eigen::MatrixXd M = A * B;
  const Eigen::MatrixXd Q = randomized_range(M, 3, 5, 9);
  CHECK((M - Q * (Q.transpose() * M)).norm() <= 1e-10 * M.norm());

  // determinism: bitwise-reproducible sketch
  const Eigen::MatrixXd Q2 = randomized_range(M, 3, 5, 9);
  CHECK(Q == Q2);

  // geometric spectrum: residual within the asserted bound, sigma_{r+1}
  // taken from a dense SVD oracle
  const Eigen::Index n = 30;
  Eigen::VectorXd sv(n);
  for (Eigen::Index i = 0; i < n; ++i) sv(i) = std::pow(10.0, -double(i));
  const Eigen::MatrixXd U0 =
      Eigen::HouseholderQR<Eigen::MatrixXd>(seeded_random(n, n, 41))
          .householderQ();
  const Eigen::MatrixXd V0 =
      Eigen::HouseholderQR<Eigen::MatrixXd>(seeded_random(n, n, 42))
          .householderQ();
  const Eigen::MatrixXd G = U0 * sv.asDiagonal() * V0.transpose();
  const int rank = 4, oversample = 4;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const double sigma_next = svd.singularValues()(rank);
  const Eigen::MatrixXd Qg = randomized_range(G, rank, oversample, 11);
  const double resid = (G - Qg * (Qg.transpose() * G)).norm();
  CHECK(resid <= 10.0 * sigma_next * std::sqrt(double(rank + oversample)));

  CHECK_THROWS_AS(randomized_range(M, 30, 10, 0), ArgumentError);
}

TEST_CASE("galerkin coordinates") {
  // identity basis: coordinates are the vector itself
  Projection id;
  id.basis = Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd w = seeded_random(5, 1, 51);
  CHECK(galerkin_coords(id, w) == w);

  // X-orthonormality: w = Phi e1 maps to e1
  const Eigen::SparseMatrix<double> X = h1_matrix(5);
  const Eigen::MatrixXd M = seeded_random(X.rows(), 10, 52);
  const Projection proj = pod(M, 1e-10, &X);
  REQUIRE(proj.n() >= 2);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(proj.n(), 0);
  const Eigen::VectorXd we1 = proj.basis * e1;
  const Eigen::VectorXd coords = galerkin_coords(proj, we1);
  CHECK((coords - e1).cwiseAbs().maxCoeff() <= 1e-10);

  // completeness: with a full basis, Phi what = w for random w
  const Eigen::Index N = X.rows();
  const Eigen::MatrixXd full_snaps = seeded_random(N, 2 * N, 53);
  const Projection full = pod(full_snaps, 1e-13, &X);
  REQUIRE(full.n() == N);
  const Eigen::VectorXd wr = seeded_random(N, 1, 54);
  const Eigen::VectorXd back = full.basis * galerkin_coords(full, wr);
  CHECK((back - wr).cwiseAbs().maxCoeff() <= 1e-10 * wr.cwiseAbs().maxCoeff());
}

TEST_CASE("space-time coordinates match the explicit Kronecker oracle") {
  const SnapshotTensor U = heat_snapshots(4, 5, 5);
  const FESpaceDef space(build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                                    std::array<int, 2>{4, 4}),
                         DirichletTag::boundary);
  const Eigen::SparseMatrix<double> X =
      inner_product_matrix(space, InnerProduct::h10);
  const TransientProjection tp = space_time_pod(U, X, 1e-8);

  const Eigen::Index N = U.extent(0), nt = U.extent(1);
  const Eigen::VectorXd w = seeded_random(N * nt, 1, 61);
  const Eigen::MatrixXd K = kron_dense(tp.temporal, tp.spatial);
  Eigen::SparseMatrix<double> Ist(nt, nt);
  Ist.setIdentity();
  // brute-force Kron multiplication of the space-time inner product
  Eigen::MatrixXd Xst = Eigen::MatrixXd::Zero(N * nt, N * nt);
  const Eigen::MatrixXd Xd(X);
  for (Eigen::Index j = 0; j < nt; ++j)
    Xst.block(j * N, j * N, N, N) = Xd;
  const Eigen::VectorXd expected = K.transpose() * (Xst * w);
  const Eigen::VectorXd got = galerkin_coords(tp, w);
  CHECK((got - expected).cwiseAbs().maxCoeff() <=
        1e-11 * (1.0 + expected.cwiseAbs().maxCoeff()));

  // factor-wise expansion equals the explicit Kron multiply
  const Eigen::VectorXd coords = seeded_random(tp.n(), 1, 62);
  CHECK((st_expand(tp, coords) - K * coords).cwiseAbs().maxCoeff() <= 1e-12);
}
