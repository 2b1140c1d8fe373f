#include "rbrom/fom_solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace rbrom {

namespace {

std::span<const double> mu_of(const Realization& r, int param) {
  return {r.params.col(param).data(), static_cast<size_t>(r.params.rows())};
}

void check_uniform_grid(const Realization& r) {
  if (r.times.size() < 2)
    throw ArgumentError("transient solve needs a time grid");
  const double dt = r.dt();
  for (size_t i = 1; i < r.times.size(); ++i) {
    const double step = r.times[i] - r.times[i - 1];
    if (!(step > 0.0) || std::abs(step - dt) > 1e-12 * std::abs(dt))
      throw ArgumentError("nonuniform time grid");
  }
}

Eigen::SparseMatrix<double> factor_input(const BatchedSparseCsc& m, int p) {
  Eigen::SparseMatrix<double> out = m.materialize(p);
  mem::note(sizeof(double) * static_cast<size_t>(out.nonZeros()) +
            sizeof(int) * static_cast<size_t>(out.nonZeros() + out.cols() + 1));
  return out;
}

// evaluates g at the dirichlet vertices for one (mu, t)
void dirichlet_values(const ParamCoeff& g, const FESpaceDef& space,
                      std::span<const double> mu, double t,
                      Eigen::VectorXd& out) {
  const auto& dofs = space.dirichlet_dofs();
  out.resize(static_cast<Eigen::Index>(dofs.size()));
  for (size_t i = 0; i < dofs.size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        g(mu, t, space.mesh().vertex(dofs[i]));
}

}  // namespace

BatchedVector interpolate_dirichlet(const ParamCoeff& g, const BatchPlan& plan,
                                    const FESpaceDef& space) {
  BatchedVector out;
  out.values.resize(space.n_dirichlet(), plan.size());
  mem::note(sizeof(double) * static_cast<size_t>(out.values.size()));
  if (space.n_dirichlet() == 0) return out;
  Eigen::VectorXd col;
  for (int b = 0; b < plan.size(); ++b) {
    const auto& pt = plan.points[static_cast<size_t>(b)];
    dirichlet_values(g, space, mu_of(*plan.realization, pt.param), pt.t, col);
    out.values.col(b) = col;
  }
  return out;
}

Eigen::MatrixXd interpolate_initial(const ProblemDef& problem,
                                    const Realization& r) {
  const auto& space = *problem.space;
  Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(space.n_free(), r.nparams());
  if (problem.zero_initial || !problem.initial_u0) return w0;
  for (int p = 0; p < r.nparams(); ++p)
    for (int i = 0; i < space.n_free(); ++i)
      w0(i, p) = problem.initial_u0(
          mu_of(r, p), 0.0,
          space.mesh().vertex(space.free_dofs()[static_cast<size_t>(i)]));
  return w0;
}

SteadyResult fom_solve_steady(const ProblemDef& problem, const Realization& r,
                              double eps, int max_iter,
                              const NewtonHooks& hooks) {
  problem.validate();
  if (problem.transient)
    throw ArgumentError("fom_solve_steady needs a steady problem");
  const auto& space = *problem.space;
  const int B = r.nparams();
  const int nf = space.n_free();

  Timer timer;
  mem::Meter meter;
  RunStats stats;
  stats.iterations.assign(static_cast<size_t>(B), 0);

  const BatchPlan plan = BatchPlan::steady(r);
  const BatchedVector g = interpolate_dirichlet(problem.dirichlet_g, plan, space);

  // full nodal state per parameter; Dirichlet rows fixed, free rows iterated
  Eigen::MatrixXd state =
      Eigen::MatrixXd::Zero(space.mesh().num_vertices(), B);
  mem::note(sizeof(double) * static_cast<size_t>(state.size()));
  for (int i = 0; i < space.n_dirichlet(); ++i)
    state.row(space.dirichlet_dofs()[static_cast<size_t>(i)]) = g.values.row(i);

  BatchedVector solution;
  solution.values.setZero(nf, B);
  mem::note(sizeof(double) * static_cast<size_t>(solution.values.size()));

  auto residual_terms = [&](std::vector<VectorTerm>& terms) {
    terms.push_back({&*problem.stiffness, ElemMode::action, 1.0, &state});
    if (problem.reaction)
      terms.push_back({&*problem.reaction, ElemMode::vector, 1.0, &state});
    if (problem.load)
      terms.push_back({&*problem.load, ElemMode::vector, -1.0, nullptr});
  };

  if (problem.is_linear()) {
    const BatchedSparseCsc J =
        assemble_batched_matrix({&*problem.stiffness, 1}, plan, space);
    std::vector<VectorTerm> terms;
    residual_terms(terms);
    const BatchedVector res = assemble_batched_vector(terms, plan, space);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    for (int p = 0; p < B; ++p) {
      if (hooks.on_residual) hooks.on_residual(p, res.values.col(p));
      if (hooks.on_jacobian) hooks.on_jacobian(p, J.values.col(p));
      lu.compute(factor_input(J, p));
      if (lu.info() != Eigen::Success)
        throw SolveError("singular Jacobian for parameter " +
                         std::to_string(p));
      solution.values.col(p) = lu.solve(-res.values.col(p));
      stats.iterations[static_cast<size_t>(p)] = 1;
    }
  } else {
    // Newton in lockstep across the parameters; a parameter stops iterating
    // once its update norm drops below eps.
    std::vector<WeakFormKernel const*> jac_kernels = {&*problem.stiffness,
                                                      &*problem.reaction};
    std::vector<char> done(static_cast<size_t>(B), 0);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double last_norm = 0.0;
    int remaining = B;
    for (int k = 0; k < max_iter && remaining > 0; ++k) {
      for (int p = 0; p < B; ++p)
        for (int i = 0; i < nf; ++i)
          state(space.free_dofs()[static_cast<size_t>(i)], p) =
              solution.values(i, p);

      std::vector<WeakFormKernel> jks;
      for (auto* kp : jac_kernels) jks.push_back(*kp);
      const BatchedSparseCsc J =
          assemble_batched_matrix(jks, plan, space, {}, &state);
      std::vector<VectorTerm> terms;
      residual_terms(terms);
      const BatchedVector res = assemble_batched_vector(terms, plan, space);

      for (int p = 0; p < B; ++p) {
        if (done[static_cast<size_t>(p)]) continue;
        if (hooks.on_residual) hooks.on_residual(p, res.values.col(p));
        if (hooks.on_jacobian) hooks.on_jacobian(p, J.values.col(p));
        lu.compute(factor_input(J, p));
        if (lu.info() != Eigen::Success)
          throw SolveError("singular Jacobian for parameter " +
                           std::to_string(p));
        const Eigen::VectorXd delta = lu.solve(-res.values.col(p));
        solution.values.col(p) += delta;
        stats.iterations[static_cast<size_t>(p)] += 1;
        last_norm = res.values.col(p).norm();
        if (delta.norm() < eps) {
          done[static_cast<size_t>(p)] = 1;
          --remaining;
        }
      }
    }
    if (remaining > 0)
      throw NonConvergenceError("Newton did not converge within max_iter",
                                last_norm);
  }

  stats.wall_ns = timer.ns();
  stats.alloc_bytes = meter.bytes();
  return {std::move(solution), std::move(stats)};
}

TransientResult fom_solve_transient(const ProblemDef& problem,
                                    const Realization& r, double theta,
                                    double eps, int max_iter) {
  problem.validate();
  (void)eps;
  (void)max_iter;
  if (!problem.transient)
    throw ArgumentError("fom_solve_transient needs a transient problem");
  if (problem.reaction)
    throw ArgumentError(
        "transient problems with the cubic reaction are not supported");
  if (!(theta > 0.0) || theta > 1.0)
    throw ArgumentError("theta must lie in (0, 1]");
  check_uniform_grid(r);

  const auto& space = *problem.space;
  const int B = r.nparams();
  const int nf = space.n_free();
  const int nd = space.n_dirichlet();
  const int nt = r.nsteps();
  const double dt = r.dt();

  Timer timer;
  mem::Meter meter;
  RunStats stats;
  stats.iterations.assign(static_cast<size_t>(B), nt);

  const bool time_dep = problem.stiffness->depends_t || problem.mass->depends_t;

  // boundary values at every grid instant t_0..t_Nt, per parameter
  std::vector<Eigen::MatrixXd> gvals(static_cast<size_t>(nt) + 1);
  {
    Eigen::VectorXd col;
    for (int n = 0; n <= nt; ++n) {
      auto& gm = gvals[static_cast<size_t>(n)];
      gm.resize(nd, B);
      for (int p = 0; p < B; ++p) {
        dirichlet_values(problem.dirichlet_g, space, mu_of(r, p),
                         r.step_time(n), col);
        gm.col(p) = col;
      }
    }
    mem::note(sizeof(double) * static_cast<size_t>(nd) * (nt + 1) * B);
  }

  Eigen::MatrixXd traj(static_cast<Eigen::Index>(nf) * nt, B);
  mem::note(sizeof(double) * static_cast<size_t>(traj.size()));

  BatchedSparseCsc A, M, A_fd, M_fd;
  std::vector<std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> lus;
  auto assemble_at = [&](double t_th, int step) {
    BatchPlan plan;
    plan.realization = &r;
    for (int p = 0; p < B; ++p) plan.points.push_back({p, t_th, step});
    A = assemble_batched_matrix({&*problem.stiffness, 1}, plan, space);
    M = assemble_batched_matrix({&*problem.mass, 1}, plan, space);
    A_fd = assemble_batched_fd({&*problem.stiffness, 1}, plan, space);
    M_fd = assemble_batched_fd({&*problem.mass, 1}, plan, space);
  };
  auto factor_all = [&]() {
    lus.clear();
    for (int p = 0; p < B; ++p) {
      Eigen::SparseMatrix<double> lhs =
          factor_input(M, p) + theta * dt * factor_input(A, p);
      lus.push_back(
          std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>());
      lus.back()->compute(lhs);
      if (lus.back()->info() != Eigen::Success)
        throw SolveError("singular transient system for parameter " +
                         std::to_string(p));
    }
  };

  if (!time_dep) {
    assemble_at(r.times.front(), 0);
    factor_all();
  }

  Eigen::MatrixXd u_prev = interpolate_initial(problem, r);  // nf x B
  mem::note(sizeof(double) * static_cast<size_t>(u_prev.size()));

  WeakFormKernel load_kernel =
      problem.load ? *problem.load
                   : WeakFormKernel(KernelKind::load, constant_coeff(0.0), 2,
                                    false, false);
  Eigen::VectorXd gdot(nd), gth(nd), rhs(nf);
  BatchedVector load_n;
  for (int n = 1; n <= nt; ++n) {
    const double t_th = r.step_time(n - 1) + theta * dt;
    if (time_dep) {
      assemble_at(t_th, n);
      factor_all();
    }
    BatchPlan plan;
    plan.realization = &r;
    for (int p = 0; p < B; ++p) plan.points.push_back({p, t_th, n});
    std::vector<VectorTerm> terms = {{&load_kernel, ElemMode::vector, 1.0, nullptr}};
    load_n = assemble_batched_vector(terms, plan, space, {},
                                     n == 1 ? nullptr : &load_n);

    for (int p = 0; p < B; ++p) {
      const auto& g_prev = gvals[static_cast<size_t>(n - 1)];
      const auto& g_next = gvals[static_cast<size_t>(n)];
      gdot = (g_next.col(p) - g_prev.col(p)) / dt;
      gth = g_prev.col(p) + theta * dt * gdot;
      rhs = load_n.values.col(p);
      rhs.noalias() -= A.view(p) * u_prev.col(p);
      if (nd > 0) {
        rhs.noalias() -= A_fd.view(p) * gth;
        rhs.noalias() -= M_fd.view(p) * gdot;
      }
      const Eigen::VectorXd v = lus[static_cast<size_t>(p)]->solve(rhs);
      if (lus[static_cast<size_t>(p)]->info() != Eigen::Success)
        throw SolveError("transient solve failed for parameter " +
                         std::to_string(p));
      u_prev.col(p) += dt * v;
      traj.block(static_cast<Eigen::Index>(nf) * (n - 1), p, nf, 1) =
          u_prev.col(p);
    }
  }

  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(traj.data(), traj.size());
  // canonical layout: within a column, space is fastest over the stacked
  // time blocks; columns are parameters
  SnapshotTensor tensor({Axis::space, Axis::time, Axis::param},
                        {nf, nt, B}, std::move(flat), echo_of(r));

  stats.wall_ns = timer.ns();
  stats.alloc_bytes = meter.bytes();
  return {std::move(tensor), std::move(stats)};
}

Collected collect_snapshots(const ProblemDef& problem, const SolverConfig& cfg,
                            const Realization& r, int record_res,
                            int record_jac) {
  Collected out;
  if (record_res > r.nparams() || record_jac > r.nparams())
    throw ArgumentError("cannot record more snapshots than parameters");

  if (!problem.transient) {
    std::vector<Eigen::VectorXd> res_cols, jac_cols;
    NewtonHooks hooks;
    if (record_res > 0)
      hooks.on_residual = [&](int p, const Eigen::VectorXd& v) {
        if (p < record_res) res_cols.push_back(v);
      };
    if (record_jac > 0)
      hooks.on_jacobian = [&](int p, const Eigen::VectorXd& v) {
        if (p < record_jac) jac_cols.push_back(v);
      };
    SteadyResult solved = fom_solve_steady(problem, r, cfg.eps, cfg.max_iter, hooks);
    out.solutions =
        SnapshotTensor::from_matrix(Axis::space, solved.solution.values, echo_of(r));
    out.stats = solved.stats;
    auto to_matrix = [](const std::vector<Eigen::VectorXd>& cols) {
      Eigen::MatrixXd m(cols.front().size(),
                        static_cast<Eigen::Index>(cols.size()));
      for (size_t i = 0; i < cols.size(); ++i)
        m.col(static_cast<Eigen::Index>(i)) = cols[i];
      return m;
    };
    if (!res_cols.empty()) {
      out.residuals =
          SnapshotTensor::from_matrix(Axis::space, to_matrix(res_cols), echo_of(r));
      out.has_residuals = true;
    }
    if (!jac_cols.empty()) {
      out.jacobians = SnapshotTensor::from_matrix(Axis::space_nnz,
                                                  to_matrix(jac_cols), echo_of(r));
      out.has_jacobians = true;
    }
    return out;
  }

  TransientResult solved =
      fom_solve_transient(problem, r, cfg.theta, cfg.eps, cfg.max_iter);
  out.solutions = std::move(solved.trajectory);
  out.stats = std::move(solved.stats);
  if (record_res > 0) {
    out.residuals = transient_residual_at_zero(problem, take_params(r, record_res));
    out.has_residuals = true;
  }
  if (record_jac > 0) {
    out.jacobians = transient_jacobian_nnz(problem, take_params(r, record_jac));
    out.has_jacobians = true;
  }
  return out;
}

SnapshotTensor transient_residual_at_zero(const ProblemDef& problem,
                                          const Realization& r) {
  problem.validate();
  if (!problem.transient)
    throw ArgumentError("needs a transient problem");
  check_uniform_grid(r);
  const auto& space = *problem.space;
  const int B = r.nparams();
  const int nt = r.nsteps();
  const double dt = r.dt();
  const int nv = space.mesh().num_vertices();

  const BatchPlan plan = BatchPlan::transient(r);
  // states: Dirichlet extensions E(0, g_n) and E(0, g_n - g_{n-1})
  Eigen::MatrixXd state_g = Eigen::MatrixXd::Zero(nv, plan.size());
  Eigen::MatrixXd state_diff = Eigen::MatrixXd::Zero(nv, plan.size());
  mem::note(2 * sizeof(double) * static_cast<size_t>(state_g.size()));
  {
    Eigen::VectorXd g_now, g_prev;
    for (int b = 0; b < plan.size(); ++b) {
      const auto& pt = plan.points[static_cast<size_t>(b)];
      dirichlet_values(problem.dirichlet_g, space, mu_of(r, pt.param), pt.t,
                       g_now);
      dirichlet_values(problem.dirichlet_g, space, mu_of(r, pt.param),
                       r.step_time(pt.step - 1), g_prev);
      for (int i = 0; i < space.n_dirichlet(); ++i) {
        const int v = space.dirichlet_dofs()[static_cast<size_t>(i)];
        state_g(v, b) = g_now(i);
        state_diff(v, b) = g_now(i) - g_prev(i);
      }
    }
  }

  WeakFormKernel load_kernel =
      problem.load ? *problem.load
                   : WeakFormKernel(KernelKind::load, constant_coeff(0.0), 2,
                                    false, false);
  std::vector<VectorTerm> terms = {
      {&*problem.stiffness, ElemMode::action, 1.0, &state_g},
      {&*problem.mass, ElemMode::action, 1.0 / dt, &state_diff},
      {&load_kernel, ElemMode::vector, -1.0, nullptr},
  };
  const BatchedVector rho = assemble_batched_vector(terms, plan, space);
  return SnapshotTensor::from_mode1(Axis::space, rho.values, nt, B, echo_of(r));
}

SnapshotTensor transient_jacobian_nnz(const ProblemDef& problem,
                                      const Realization& r) {
  problem.validate();
  if (!problem.transient)
    throw ArgumentError("needs a transient problem");
  check_uniform_grid(r);
  const BatchPlan plan = BatchPlan::transient(r);
  const BatchedSparseCsc A =
      assemble_batched_matrix({&*problem.stiffness, 1}, plan, *problem.space);
  return SnapshotTensor::from_mode1(Axis::space_nnz, A.values, r.nsteps(),
                                    r.nparams(), echo_of(r));
}

InnerProduct inner_product_from_string(const std::string& name) {
  if (name == "h10") return InnerProduct::h10;
  if (name == "l2") return InnerProduct::l2;
  if (name == "h1") return InnerProduct::h1;
  throw ConfigError("unknown inner product: " + name);
}

std::string to_string(InnerProduct ip) {
  switch (ip) {
    case InnerProduct::h10:
      return "h10";
    case InnerProduct::l2:
      return "l2";
    case InnerProduct::h1:
      return "h1";
  }
  throw ConfigError("unknown inner product code");
}

Eigen::SparseMatrix<double> inner_product_matrix(const FESpaceDef& space,
                                                 InnerProduct ip) {
  ParamSpace dummy({{0.0, 1.0}});
  const Realization r = sample_realization(dummy, 1, Sampling::uniform, 0);
  const BatchPlan plan = BatchPlan::steady(r);
  std::vector<WeakFormKernel> kernels;
  if (ip == InnerProduct::h10 || ip == InnerProduct::h1)
    kernels.emplace_back(KernelKind::stiffness, constant_coeff(1.0), 2, false,
                         false);
  if (ip == InnerProduct::l2 || ip == InnerProduct::h1)
    kernels.emplace_back(KernelKind::mass, constant_coeff(1.0), 2, false,
                         false);
  const BatchedSparseCsc m = assemble_batched_matrix(kernels, plan, space);
  return m.materialize(0);
}

}  // namespace rbrom
