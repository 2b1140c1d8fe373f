#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "rbrom/fom_solver.hpp"

using namespace rbrom;

namespace {

WeakFormKernel unit_stiffness() {
  return {KernelKind::stiffness, constant_coeff(1.0), 2, false, false};
}
WeakFormKernel unit_mass() {
  return {KernelKind::mass, constant_coeff(1.0), 2, false, false};
}

Realization dummy_realization(int n = 1) {
  return sample_realization(ParamSpace({{1.0, 5.0}, {1.0, 5.0}}), n,
                            Sampling::halton, 0);
}

// Independent dense assembler for the brute-force Newton oracle: eager
// loops, 3x3 Gauss, its own shape functions, dense global matrices.
struct DenseOracle {
  const FESpaceDef& space;
  explicit DenseOracle(const FESpaceDef& s) : space(s) {}

  static constexpr double gx[3] = {-0.7745966692414834, 0.0,
                                   0.7745966692414834};
  static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  // full-vertex stiffness / cubic-reaction residual and jacobian
  void assemble(const Eigen::VectorXd& u_full, double c_reaction, double f,
                Eigen::MatrixXd& J, Eigen::VectorXd& r) const {
    const auto& mesh = space.mesh();
    const int nv = mesh.num_vertices();
    J.setZero(nv, nv);
    r.setZero(nv);
    const double hx = mesh.h(0), hy = mesh.h(1);
    std::array<int, 4> v{};
    for (int e = 0; e < mesh.num_cells(); ++e) {
      mesh.cell_vertices(e, v);
      const auto o = mesh.cell_origin(e);
      for (int qa = 0; qa < 3; ++qa)
        for (int qb = 0; qb < 3; ++qb) {
          const double xi = gx[qa], eta = gx[qb];
          const double w = gw[qa] * gw[qb] * hx * hy / 4.0;
          const double N[4] = {(1 - xi) * (1 - eta) / 4, (1 + xi) * (1 - eta) / 4,
                               (1 - xi) * (1 + eta) / 4, (1 + xi) * (1 + eta) / 4};
          const double dNx[4] = {-(1 - eta) / 2 / hx, (1 - eta) / 2 / hx,
                                 -(1 + eta) / 2 / hx, (1 + eta) / 2 / hx};
          const double dNy[4] = {-(1 - xi) / 2 / hy, -(1 + xi) / 2 / hy,
                                 (1 - xi) / 2 / hy, (1 + xi) / 2 / hy};
          (void)o;
          double uq = 0.0;
          for (int a = 0; a < 4; ++a) uq += N[a] * u_full(v[a]);
          double gux = 0.0, guy = 0.0;
          for (int a = 0; a < 4; ++a) {
            gux += dNx[a] * u_full(v[a]);
            guy += dNy[a] * u_full(v[a]);
          }
          for (int a = 0; a < 4; ++a) {
            r(v[a]) += w * (gux * dNx[a] + guy * dNy[a] +
                            c_reaction * uq * uq * uq * N[a] - f * N[a]);
            for (int b = 0; b < 4; ++b)
              J(v[a], v[b]) += w * (dNx[a] * dNx[b] + dNy[a] * dNy[b] +
                                    3.0 * c_reaction * uq * uq * N[a] * N[b]);
          }
        }
    }
  }

  Eigen::VectorXd newton(double c_reaction, double f, double eps) const {
    const int nf = space.n_free();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd u_full =
        Eigen::VectorXd::Zero(space.mesh().num_vertices());
    Eigen::MatrixXd J;
    Eigen::VectorXd r;
    for (int k = 0; k < 50; ++k) {
      for (int i = 0; i < nf; ++i) u_full(space.free_dofs()[i]) = w(i);
      assemble(u_full, c_reaction, f, J, r);
      Eigen::MatrixXd Jff(nf, nf);
      Eigen::VectorXd rf(nf);
      for (int i = 0; i < nf; ++i) {
        rf(i) = r(space.free_dofs()[i]);
        for (int j = 0; j < nf; ++j)
          Jff(i, j) = J(space.free_dofs()[i], space.free_dofs()[j]);
      }
      const Eigen::VectorXd delta = Jff.fullPivLu().solve(-rf);
      w += delta;
      if (delta.norm() < eps) break;
    }
    return w;
  }
};

}  // namespace

TEST_CASE("mesh and space counting") {
  // (0,1)^2 with 2x2 cells: 4 cells, 9 vertices, 8 boundary + 1 interior
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{2, 2},
      DirichletTag::boundary);
  CHECK(mesh.num_cells() == 4);
  CHECK(mesh.num_vertices() == 9);
  CHECK(space.n_dirichlet() == 8);
  CHECK(space.n_free() == 1);
  CHECK(space.free_dofs()[0] == 4);  // the center vertex

  auto [mesh2, space2] = build_mesh_and_space(
      std::array<double, 4>{0.0, 2.0, 0.0, 2.0}, std::array<int, 2>{2, 2},
      DirichletTag::none);
  CHECK(space2.n_free() == 9);

  auto [mesh1, space1] = build_mesh_and_space(std::array<double, 2>{0.0, 1.0},
                                              std::array<int, 1>{4},
                                              DirichletTag::none);
  CHECK(mesh1.num_cells() == 4);
  CHECK(mesh1.num_vertices() == 5);
  std::array<int, 4> v{};
  for (int k = 0; k < 4; ++k) {
    mesh1.cell_vertices(k, v);
    CHECK(v[0] == k);
    CHECK(v[1] == k + 1);
  }

  CHECK_THROWS_AS(build_mesh(std::array<double, 2>{0.0, 1.0},
                             std::array<int, 1>{0}),
                  ArgumentError);
}

TEST_CASE("elemental stiffness and mass on the unit square") {
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{1, 1},
      DirichletTag::none);
  const Realization r = dummy_realization();
  const BatchPlan plan = BatchPlan::steady(r);

  const WeakFormKernel stiff = unit_stiffness();
  ElementalBatch batch(stiff, plan, space, ElemMode::matrix);
  ParamBlock cache = batch.make_cache();
  batch.fetch(0, cache);
  const Eigen::MatrixXd K = cache.array(0);

  // analytic integration oracle, classified by vertex adjacency:
  // diagonal 2/3, edge neighbors -1/6, diagonally opposite corners -1/3
  std::array<int, 4> v{};
  mesh.cell_vertices(0, v);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const auto xa = mesh.vertex(v[a]);
      const auto xb = mesh.vertex(v[b]);
      const int ddist = (xa[0] != xb[0]) + (xa[1] != xb[1]);
      const double expected =
          ddist == 0 ? 2.0 / 3.0 : (ddist == 1 ? -1.0 / 6.0 : -1.0 / 3.0);
      CHECK(K(a, b) == doctest::Approx(expected).epsilon(1e-14));
    }

  const WeakFormKernel mass = unit_mass();
  ElementalBatch mbatch(mass, plan, space, ElemMode::matrix);
  ParamBlock mcache = mbatch.make_cache();
  mbatch.fetch(0, mcache);
  const Eigen::MatrixXd M = mcache.array(0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const auto xa = mesh.vertex(v[a]);
      const auto xb = mesh.vertex(v[b]);
      const int ddist = (xa[0] != xb[0]) + (xa[1] != xb[1]);
      const double expected =
          ddist == 0 ? 4.0 / 36.0 : (ddist == 1 ? 2.0 / 36.0 : 1.0 / 36.0);
      CHECK(M(a, b) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("elemental 1d stiffness is the hand-integrated matrix") {
  const double h = 0.4;
  auto [mesh, space] = build_mesh_and_space(std::array<double, 2>{0.0, 2.0},
                                            std::array<int, 1>{5},
                                            DirichletTag::none);
  const Realization r = dummy_realization();
  ElementalBatch batch(unit_stiffness(), BatchPlan::steady(r), space,
                       ElemMode::matrix);
  ParamBlock cache = batch.make_cache();
  batch.fetch(2, cache);
  const Eigen::MatrixXd K = cache.array(0);
  CHECK(K(0, 0) == doctest::Approx(1.0 / h).epsilon(1e-14));
  CHECK(K(0, 1) == doctest::Approx(-1.0 / h).epsilon(1e-14));
  CHECK(K(1, 0) == doctest::Approx(-1.0 / h).epsilon(1e-14));
  CHECK(K(1, 1) == doctest::Approx(1.0 / h).epsilon(1e-14));
}

TEST_CASE("fetch allocates nothing beyond the one-time cache") {
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{8, 8},
      DirichletTag::boundary);
  const Realization r = dummy_realization(4);
  ElementalBatch batch(unit_stiffness(), BatchPlan::steady(r), space,
                       ElemMode::matrix);
  ParamBlock cache = batch.make_cache();
  batch.fetch(0, cache);
  const auto before = mem::counter();
  for (int e = 0; e < mesh.num_cells(); ++e) batch.fetch(e, cache);
  CHECK(mem::counter() == before);
}

TEST_CASE("coefficient failure reports cell and parameter") {
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{2, 2},
      DirichletTag::none);
  const Realization r = dummy_realization(2);
  WeakFormKernel bad(
      KernelKind::stiffness,
      [](std::span<const double>, double, const std::array<double, 2>&)
          -> double { throw std::runtime_error("boom"); },
      2, true, false);
  ElementalBatch batch(bad, BatchPlan::steady(r), space, ElemMode::matrix);
  ParamBlock cache = batch.make_cache();
  CHECK_THROWS_WITH_AS(batch.fetch(3, cache),
                       doctest::Contains("cell 3"), EvalError);
}

TEST_CASE("assembled stiffness and mass are symmetric, mass is SPD") {
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{5, 5},
      DirichletTag::boundary);
  const Eigen::SparseMatrix<double> A =
      inner_product_matrix(space, InnerProduct::h10);
  const Eigen::SparseMatrix<double> M =
      inner_product_matrix(space, InnerProduct::l2);
  const Eigen::MatrixXd Ad(A), Md(M);
  CHECK((Ad - Ad.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * Ad.cwiseAbs().maxCoeff());
  CHECK((Md - Md.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * Md.cwiseAbs().maxCoeff());
  Eigen::LLT<Eigen::MatrixXd> lltA(Ad), lltM(Md);
  CHECK(lltA.info() == Eigen::Success);  // SPD on free dofs
  CHECK(lltM.info() == Eigen::Success);
}

TEST_CASE("steady Poisson reproduces linear fields exactly (patch test)") {
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                 std::array<int, 2>{4, 4}),
      DirichletTag::boundary);
  problem->stiffness = unit_stiffness();
  problem->dirichlet_g = [](std::span<const double>, double,
                            const std::array<double, 2>& x) { return x[0]; };

  const Realization r = dummy_realization(2);
  const SteadyResult sol = fom_solve_steady(*problem, r, 1e-12, 10);
  const auto& space = *problem->space;
  for (int p = 0; p < 2; ++p)
    for (int i = 0; i < space.n_free(); ++i) {
      const auto x = space.mesh().vertex(space.free_dofs()[i]);
      CHECK(sol.solution.values(i, p) == doctest::Approx(x[0]).epsilon(1e-12));
    }
  // linear problems converge in exactly one iteration per parameter
  for (int p = 0; p < 2; ++p) CHECK(sol.stats.iterations[p] == 1);
}

TEST_CASE("nonlinear reaction matches the dense brute-force Newton oracle") {
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                 std::array<int, 2>{4, 4}),
      DirichletTag::boundary);
  problem->stiffness = unit_stiffness();
  problem->reaction = WeakFormKernel(
      KernelKind::nonlinear_reaction,
      [](std::span<const double> mu, double, const std::array<double, 2>&) {
        return mu[0];
      },
      4, true, false);
  problem->load = WeakFormKernel(
      KernelKind::load,
      [](std::span<const double> mu, double, const std::array<double, 2>&) {
        return mu[1];
      },
      2, true, false);
  problem->dirichlet_g = constant_coeff(0.0);

  const Realization r = dummy_realization(3);
  const SteadyResult sol = fom_solve_steady(*problem, r, 1e-12, 30);

  DenseOracle oracle(*problem->space);
  for (int p = 0; p < 3; ++p) {
    const Eigen::VectorXd w =
        oracle.newton(r.params(0, p), r.params(1, p), 1e-13);
    CHECK((sol.solution.values.col(p) - w).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(sol.stats.iterations[p] >= 2);
  }
}

TEST_CASE("transient: zero data gives the zero trajectory") {
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                 std::array<int, 2>{3, 3}),
      DirichletTag::boundary);
  problem->transient = true;
  problem->stiffness = unit_stiffness();
  problem->mass = unit_mass();
  problem->dirichlet_g = constant_coeff(0.0);
  problem->initial_u0 = constant_coeff(0.0);

  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  std::vector<double> grid;
  for (int n = 0; n <= 5; ++n) grid.push_back(0.02 * n);
  const Realization r =
      sample_realization(TransientParamSpace(box, grid), 2, Sampling::halton, 0);
  const TransientResult sol = fom_solve_transient(*problem, r, 1.0, 1e-12, 10);
  CHECK(sol.trajectory.data().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transient single-dof system matches the scalar recursion oracle") {
  // 1d mesh on (0,1) with 2 cells and boundary constraints leaves a single
  // free dof; P1 hand integration gives a = 2/h, m = 2h/3, load = h*f
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 2>{0.0, 1.0}, std::array<int, 1>{2}),
      DirichletTag::boundary);
  problem->transient = true;
  problem->stiffness = unit_stiffness();
  problem->mass = unit_mass();
  const double fval = 3.0;
  problem->load =
      WeakFormKernel(KernelKind::load, constant_coeff(fval), 2, false, false);
  problem->dirichlet_g = constant_coeff(0.0);
  problem->initial_u0 = constant_coeff(0.0);
  REQUIRE(problem->space->n_free() == 1);

  const ParamSpace box({{1.0, 5.0}});
  const int nt = 8;
  const double dt = 0.05;
  std::vector<double> grid;
  for (int n = 0; n <= nt; ++n) grid.push_back(dt * n);
  const Realization r =
      sample_realization(TransientParamSpace(box, grid), 1, Sampling::halton, 0);
  const TransientResult sol = fom_solve_transient(*problem, r, 1.0, 1e-12, 10);

  const double h = 0.5;
  const double a = 2.0 / h, m = 2.0 * h / 3.0, b = h * fval;
  double w = 0.0;
  for (int n = 1; n <= nt; ++n) {
    w = (m / dt * w + b) / (m / dt + a);
    CHECK(sol.trajectory(0, n - 1, 0) == doctest::Approx(w).epsilon(1e-14));
  }
}

TEST_CASE("theta-method convergence orders vs a fine reference") {
  // linear heat problem with time-varying Dirichlet data; errors against a
  // tiny-step reference trajectory must scale with order 1 (theta = 1) and
  // order 2 (theta = 0.5)
  auto make_problem = [] {
    auto problem = std::make_shared<ProblemDef>();
    problem->space = std::make_shared<FESpaceDef>(
        build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                   std::array<int, 2>{4, 4}),
        DirichletTag::boundary);
    problem->transient = true;
    problem->stiffness = unit_stiffness();
    problem->mass = unit_mass();
    problem->load = WeakFormKernel(
        KernelKind::load,
        [](std::span<const double> mu, double t, const std::array<double, 2>& x) {
          return mu[0] * std::sin(3.0 * t) * (1.0 + x[0]);
        },
        2, true, true);
    problem->dirichlet_g = constant_coeff(0.0);
    problem->initial_u0 = constant_coeff(0.0);
    return problem;
  };
  auto problem = make_problem();
  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  const double T = 0.4;

  auto solve_with = [&](int nsteps, double theta) {
    std::vector<double> grid;
    for (int n = 0; n <= nsteps; ++n)
      grid.push_back(T * static_cast<double>(n) / nsteps);
    const Realization r = sample_realization(TransientParamSpace(box, grid), 1,
                                             Sampling::halton, 0);
    const TransientResult sol =
        fom_solve_transient(*problem, r, theta, 1e-12, 10);
    const int nf = problem->space->n_free();
    // final-time slice
    Eigen::VectorXd u(nf);
    for (int i = 0; i < nf; ++i) u(i) = sol.trajectory(i, nsteps - 1, 0);
    return u;
  };

  for (const double theta : {1.0, 0.5}) {
    const Eigen::VectorXd ref = solve_with(512, theta);
    const double e1 = (solve_with(8, theta) - ref).norm();
    const double e2 = (solve_with(16, theta) - ref).norm();
    const double order = std::log2(e1 / e2);
    const double nominal = theta == 1.0 ? 1.0 : 2.0;
    CHECK(order == doctest::Approx(nominal).epsilon(0.15));
  }
}

TEST_CASE("manufactured solution converges at first order in h (H1)") {
  // u(mu,t,x) = t*(mu1*x1^2 + mu2*x2^2); f = du/dt - lap(u)
  auto make_problem = [](int cells) {
    auto problem = std::make_shared<ProblemDef>();
    problem->space = std::make_shared<FESpaceDef>(
        build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                   std::array<int, 2>{cells, cells}),
        DirichletTag::boundary);
    problem->transient = true;
    problem->stiffness = unit_stiffness();
    problem->mass = unit_mass();
    problem->load = WeakFormKernel(
        KernelKind::load,
        [](std::span<const double> mu, double t, const std::array<double, 2>& x) {
          return mu[0] * x[0] * x[0] + mu[1] * x[1] * x[1] -
                 2.0 * t * (mu[0] + mu[1]);
        },
        2, true, true);
    problem->dirichlet_g = [](std::span<const double> mu, double t,
                              const std::array<double, 2>& x) {
      return t * (mu[0] * x[0] * x[0] + mu[1] * x[1] * x[1]);
    };
    problem->initial_u0 = constant_coeff(0.0);
    return problem;
  };

  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  const double T = 0.1;
  auto h1_error = [&](int cells) {
    auto problem = make_problem(cells);
    // dt ~ h^2 keeps the BE time error below the spatial one
    const int nsteps = cells * cells;
    std::vector<double> grid;
    for (int n = 0; n <= nsteps; ++n)
      grid.push_back(T * static_cast<double>(n) / nsteps);
    const Realization r = sample_realization(TransientParamSpace(box, grid), 1,
                                             Sampling::halton, 0);
    const TransientResult sol =
        fom_solve_transient(*problem, r, 1.0, 1e-12, 10);
    const auto& space = *problem->space;
    const Eigen::SparseMatrix<double> X =
        inner_product_matrix(space, InnerProduct::h10);
    // exact nodal field at the final time
    Eigen::VectorXd exact(space.n_free());
    for (int i = 0; i < space.n_free(); ++i) {
      const auto x = space.mesh().vertex(space.free_dofs()[i]);
      exact(i) =
          T * (r.params(0, 0) * x[0] * x[0] + r.params(1, 0) * x[1] * x[1]);
    }
    Eigen::VectorXd u(space.n_free());
    for (int i = 0; i < space.n_free(); ++i)
      u(i) = sol.trajectory(i, nsteps - 1, 0);
    const Eigen::VectorXd d = u - exact;
    return std::sqrt(d.dot(X * d));
  };

  const double e1 = h1_error(4);
  const double e2 = h1_error(8);
  const double order = std::log2(e1 / e2);
  CHECK(order > 0.8);  // first order in h, with slack for the nodal proxy
  CHECK(order < 2.3);
}

TEST_CASE("interpolate_dirichlet") {
  auto [mesh, space] = build_mesh_and_space(
      std::array<double, 4>{0.0, 1.0, 0.0, 1.0}, std::array<int, 2>{2, 2},
      DirichletTag::boundary);
  const Realization r = dummy_realization(2);
  const BatchPlan plan = BatchPlan::steady(r);

  const BatchedVector zero =
      interpolate_dirichlet(constant_coeff(0.0), plan, space);
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

  const BatchedVector gx = interpolate_dirichlet(
      [](std::span<const double>, double, const std::array<double, 2>& x) {
        return x[0];
      },
      plan, space);
  for (int i = 0; i < space.n_dirichlet(); ++i) {
    const auto x = mesh.vertex(space.dirichlet_dofs()[i]);
    CHECK(gx.values(i, 0) == doctest::Approx(x[0]).epsilon(1e-15));
  }

  // the heat-example boundary datum vanishes at t = 0 (factor t)
  const BatchedVector g0 = interpolate_dirichlet(
      [](std::span<const double> mu, double t, const std::array<double, 2>& x) {
        return t * (mu[0] * x[0] * x[0] + mu[1] * x[1] * x[1]);
      },
      plan, space);
  CHECK(g0.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transient solver rejects bad inputs") {
  auto problem = std::make_shared<ProblemDef>();
  problem->space = std::make_shared<FESpaceDef>(
      build_mesh(std::array<double, 4>{0.0, 1.0, 0.0, 1.0},
                 std::array<int, 2>{2, 2}),
      DirichletTag::boundary);
  problem->transient = true;
  problem->stiffness = unit_stiffness();
  problem->mass = unit_mass();
  problem->dirichlet_g = constant_coeff(0.0);

  Realization r = dummy_realization(1);
  r.times = {0.0, 0.1, 0.15};  // nonuniform
  CHECK_THROWS_AS(fom_solve_transient(*problem, r, 1.0, 1e-10, 10),
                  ArgumentError);

  ProblemDef no_mass = *problem;
  no_mass.mass.reset();
  Realization ok = dummy_realization(1);
  ok.times = {0.0, 0.1, 0.2};
  CHECK_THROWS_AS(fom_solve_transient(no_mass, ok, 1.0, 1e-10, 10),
                  ArgumentError);
}
