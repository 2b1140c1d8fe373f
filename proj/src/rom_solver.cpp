#include "rbrom/rom_solver.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

namespace rbrom {

namespace {

using nlohmann::json;

std::span<const double> mu_of(const Realization& r, int param) {
  return {r.params.col(param).data(), static_cast<size_t>(r.params.rows())};
}

Eigen::MatrixXd default_pdomain(const Realization& r) { return r.bounds; }

}  // namespace

bool OperatorEcho::operator==(const OperatorEcho& o) const {
  return dim == o.dim && cells == o.cells && domain == o.domain &&
         dirichlet == o.dirichlet && transient == o.transient &&
         has_mass == o.has_mass && has_load == o.has_load &&
         has_reaction == o.has_reaction && t0 == o.t0 && dt == o.dt &&
         nsteps == o.nsteps && theta == o.theta && tol == o.tol &&
         nparams == o.nparams && nparams_res == o.nparams_res &&
         nparams_jac == o.nparams_jac && sampling == o.sampling &&
         seed == o.seed && inner == o.inner &&
         pdomain.rows() == o.pdomain.rows() &&
         pdomain.cols() == o.pdomain.cols() && pdomain == o.pdomain;
}

OperatorEcho make_echo(const ProblemDef& problem, const ReductionConfig& cfg,
                       const Realization& offline) {
  OperatorEcho e;
  const auto& mesh = problem.space->mesh();
  e.dim = mesh.dim();
  e.cells = {mesh.cells_on_axis(0), mesh.dim() == 2 ? mesh.cells_on_axis(1) : 0};
  e.domain = {mesh.lo(0), mesh.hi(0), mesh.dim() == 2 ? mesh.lo(1) : 0.0,
              mesh.dim() == 2 ? mesh.hi(1) : 0.0};
  e.dirichlet = problem.space->dirichlet_tag() == DirichletTag::boundary ? 1 : 0;
  e.transient = problem.transient;
  e.has_mass = problem.mass.has_value();
  e.has_load = problem.load.has_value();
  e.has_reaction = problem.reaction.has_value();
  if (problem.transient) {
    e.t0 = offline.times.front();
    e.dt = offline.dt();
    e.nsteps = offline.nsteps();
  }
  e.theta = cfg.solver.theta;
  e.tol = cfg.tol;
  e.nparams = cfg.nparams;
  e.nparams_res = cfg.nparams_res;
  e.nparams_jac = cfg.nparams_jac;
  e.sampling = static_cast<std::uint32_t>(offline.strategy);
  e.seed = offline.seed;
  e.inner = static_cast<std::uint32_t>(cfg.inner);
  e.pdomain = default_pdomain(offline);
  return e;
}

void ReducedOperator::prepare() {
  const auto& space = *problem->space;
  if (!transient) {
    std::vector<SampledTerm> res_terms;
    res_terms.push_back({*problem->stiffness, ElemMode::action, 1.0, 0});
    if (problem->reaction)
      res_terms.push_back({*problem->reaction, ElemMode::vector, 1.0, 0});
    if (problem->load)
      res_terms.push_back({*problem->load, ElemMode::vector, -1.0, -1});
    res_sampler = std::make_unique<RestrictedSampler>(
        std::move(res_terms), space, false, res_hr.targets);

    std::vector<SampledTerm> jac_terms;
    jac_terms.push_back({*problem->stiffness, ElemMode::matrix, 1.0, -1});
    if (problem->reaction)
      jac_terms.push_back({*problem->reaction, ElemMode::matrix, 1.0, 0});
    jac_sampler = std::make_unique<RestrictedSampler>(
        std::move(jac_terms), space, true, jac_hr.targets);
  } else {
    std::vector<SampledTerm> res_terms;
    res_terms.push_back({*problem->stiffness, ElemMode::action, 1.0, 0});
    res_terms.push_back({*problem->mass, ElemMode::action, 1.0 / dt, 1});
    if (problem->load)
      res_terms.push_back({*problem->load, ElemMode::vector, -1.0, -1});
    res_sampler = std::make_unique<RestrictedSampler>(
        std::move(res_terms), space, false, res_hr.targets);

    std::vector<SampledTerm> jac_terms;
    jac_terms.push_back({*problem->stiffness, ElemMode::matrix, 1.0, -1});
    jac_sampler = std::make_unique<RestrictedSampler>(
        std::move(jac_terms), space, true, jac_hr.targets);
  }
}

ReducedOperator build_reduced_operator(const ReductionConfig& cfg,
                                       std::shared_ptr<const ProblemDef> problem,
                                       const Realization& offline,
                                       Collected* out_snapshots) {
  problem->validate();
  if (cfg.nparams_jac < 1)
    throw ArgumentError("nparams_jac must be at least 1");
  if (cfg.nparams_res < 1)
    throw ArgumentError("nparams_res must be at least 1");
  if (cfg.nparams != offline.nparams())
    throw ArgumentError("offline realization size does not match nparams");
  if (cfg.nparams_res > cfg.nparams || cfg.nparams_jac > cfg.nparams)
    throw ArgumentError("snapshot subset counts exceed nparams");

  const auto& space = *problem->space;
  Collected snaps = collect_snapshots(*problem, cfg.solver, offline,
                                      cfg.nparams_res, cfg.nparams_jac);
  const Eigen::SparseMatrix<double> X = inner_product_matrix(space, cfg.inner);

  ReducedOperator op;
  op.problem = problem;
  op.transient = problem->transient;
  op.echo = make_echo(*problem, cfg, offline);

  if (!problem->transient) {
    op.trial = pod(snaps.solutions.as_matrix(), cfg.tol, &X);
    op.test_basis = op.trial.basis;
    op.res_hr =
        hyperreduce_vector(snaps.residuals, op.test_basis, cfg.tol, space);
    op.jac_hr = hyperreduce_matrix(snaps.jacobians,
                                   *space.assembly_data().pattern,
                                   op.trial.basis, op.test_basis, cfg.tol, space);
  } else {
    if (problem->mass->depends_mu || problem->mass->depends_t)
      throw ArgumentError(
          "the space-time reduced operator needs a parameter-independent mass");
    op.st_trial = space_time_pod(snaps.solutions, X, cfg.tol);
    op.test_basis = op.st_trial.spatial;
    op.dt = offline.dt();
    op.res_hr = hyperreduce_vector(snaps.residuals, op.st_trial.spatial,
                                   op.st_trial.temporal, cfg.tol, space);
    op.jac_hr = hyperreduce_matrix(
        snaps.jacobians, *space.assembly_data().pattern, op.st_trial.spatial,
        op.st_trial.temporal, op.st_trial.spatial, op.st_trial.temporal,
        cfg.tol, space);

    const Realization one = take_params(offline, 1);
    const BatchPlan plan = BatchPlan::steady(one);
    const Eigen::SparseMatrix<double> M =
        assemble_batched_matrix({&*problem->mass, 1}, plan, space).materialize(0);
    const auto& P1 = op.st_trial.spatial;
    const auto& P2 = op.st_trial.temporal;
    const int nt = static_cast<int>(P2.rows());
    op.Mhat = P1.transpose() * M * P1;
    op.That0 = P2.transpose() * P2;
    op.That1 = P2.middleRows(1, nt - 1).transpose() * P2.middleRows(0, nt - 1);
    op.MtPhi1 = M.transpose() * P1;
  }

  op.prepare();
  if (out_snapshots != nullptr) *out_snapshots = std::move(snaps);
  return op;
}

namespace {

// state accessors used by the reduced-domain sampling
StateFn dirichlet_state(const ProblemDef& problem, const Realization& r,
                        int param, double t) {
  const auto* space = problem.space.get();
  const auto g = problem.dirichlet_g;
  auto mu = mu_of(r, param);
  return [space, g, mu, t](int v) {
    if (space->free_index(v) >= 0) return 0.0;
    return g(mu, t, space->mesh().vertex(v));
  };
}

StateFn dirichlet_diff_state(const ProblemDef& problem, const Realization& r,
                             int param, double t_now, double t_prev) {
  const auto* space = problem.space.get();
  const auto g = problem.dirichlet_g;
  auto mu = mu_of(r, param);
  return [space, g, mu, t_now, t_prev](int v) {
    if (space->free_index(v) >= 0) return 0.0;
    const auto x = space->mesh().vertex(v);
    return g(mu, t_now, x) - g(mu, t_prev, x);
  };
}

StateFn iterate_state(const ProblemDef& problem, const Realization& r,
                      int param, const Eigen::MatrixXd& basis,
                      const Eigen::VectorXd& what) {
  const auto* space = problem.space.get();
  const auto g = problem.dirichlet_g;
  auto mu = mu_of(r, param);
  const Eigen::MatrixXd* B = &basis;
  const Eigen::VectorXd* w = &what;
  return [space, g, mu, B, w](int v) {
    const int fi = space->free_index(v);
    if (fi >= 0) return B->row(fi).dot(*w);
    return g(mu, 0.0, space->mesh().vertex(v));
  };
}

}  // namespace

OnlineResult online_solve(const ReducedOperator& rbop, const Realization& r,
                          double eps, int max_iter) {
  const auto& problem = *rbop.problem;
  const int B = r.nparams();
  const int n = rbop.n();

  Timer timer;
  mem::Meter meter;
  RunStats stats;
  stats.iterations.assign(static_cast<size_t>(B), 0);

  Eigen::MatrixXd coords(n, B);
  Eigen::VectorXd sampled_j(rbop.jac_sampler->ntargets());
  Eigen::VectorXd sampled_r(rbop.res_sampler->ntargets());
  Eigen::VectorXd rhat(n), what(n);
  mem::note(sizeof(double) *
            static_cast<size_t>(coords.size() + sampled_j.size() +
                                sampled_r.size() + 2 * n + n * n));

  if (!rbop.transient) {
    const bool linear = problem.is_linear();
    for (int p = 0; p < B; ++p) {
      if (linear) {
        rbop.jac_sampler->sample(r, p, nullptr, sampled_j);
        const Eigen::MatrixXd Jhat = online_reduced_matrix(
            rbop.jac_hr, online_coefficients(rbop.jac_hr, sampled_j));
        auto provider = [&](int, int) {
          return dirichlet_state(problem, r, p, 0.0);
        };
        rbop.res_sampler->sample(r, p, provider, sampled_r);
        rhat = online_reduced_vector(
            rbop.res_hr, online_coefficients(rbop.res_hr, sampled_r));
        what = Jhat.partialPivLu().solve(-rhat);
        stats.iterations[static_cast<size_t>(p)] = 1;
      } else {
        what.setZero();
        bool converged = false;
        double last_delta = 0.0;
        for (int k = 0; k < max_iter; ++k) {
          auto provider = [&](int, int) {
            return iterate_state(problem, r, p, rbop.trial.basis, what);
          };
          rbop.res_sampler->sample(r, p, provider, sampled_r);
          rhat = online_reduced_vector(
              rbop.res_hr, online_coefficients(rbop.res_hr, sampled_r));
          rbop.jac_sampler->sample(r, p, provider, sampled_j);
          const Eigen::MatrixXd Jhat = online_reduced_matrix(
              rbop.jac_hr, online_coefficients(rbop.jac_hr, sampled_j));
          const Eigen::VectorXd delta = Jhat.partialPivLu().solve(-rhat);
          what += delta;
          stats.iterations[static_cast<size_t>(p)] += 1;
          last_delta = delta.norm();
          if (last_delta < eps) {
            converged = true;
            break;
          }
        }
        if (!converged)
          throw NonConvergenceError(
              "reduced Newton did not converge for parameter " +
                  std::to_string(p) + " after " + std::to_string(max_iter) +
                  " iterations (last |delta| = " + std::to_string(last_delta) +
                  ")",
              last_delta);
      }
      coords.col(p) = what;
    }
  } else {
    const int n1 = rbop.n1();
    const int n2 = rbop.n2();
    const Eigen::MatrixXd lhs_time =
        (1.0 / rbop.dt) * kron_dense(rbop.That0 - rbop.That1, rbop.Mhat);
    Eigen::MatrixXd w0;
    if (!problem.zero_initial) w0 = interpolate_initial(problem, r);
    for (int p = 0; p < B; ++p) {
      rbop.jac_sampler->sample(r, p, nullptr, sampled_j);
      const Eigen::MatrixXd Jhat = online_reduced_matrix(
          rbop.jac_hr, online_coefficients(rbop.jac_hr, sampled_j));
      auto provider = [&](int state_id, int step) {
        const double t_now = r.step_time(step);
        if (state_id == 0) return dirichlet_state(problem, r, p, t_now);
        return dirichlet_diff_state(problem, r, p, t_now,
                                    r.step_time(step - 1));
      };
      rbop.res_sampler->sample(r, p, provider, sampled_r);
      rhat = online_reduced_vector(
          rbop.res_hr, online_coefficients(rbop.res_hr, sampled_r));

      Eigen::VectorXd rhs = -rhat;
      if (!problem.zero_initial) {
        const Eigen::VectorXd q = rbop.MtPhi1.transpose() * w0.col(p);
        for (int i2 = 0; i2 < n2; ++i2)
          rhs.segment(static_cast<Eigen::Index>(i2) * n1, n1) +=
              (rbop.st_trial.temporal(0, i2) / rbop.dt) * q;
      }
      const Eigen::MatrixXd lhs = lhs_time + Jhat;
      what = lhs.partialPivLu().solve(rhs);
      coords.col(p) = what;
      stats.iterations[static_cast<size_t>(p)] = 1;
    }
  }

  stats.wall_ns = timer.ns();
  stats.alloc_bytes = meter.bytes();
  OnlineResult out;
  out.coords = SnapshotTensor::from_matrix(Axis::reduced, coords, echo_of(r));
  out.stats = std::move(stats);
  return out;
}

Reconstruction reconstruct(const ReducedOperator& rbop,
                           const SnapshotTensor& coords, const Realization& r) {
  const auto& problem = *rbop.problem;
  const auto& space = *problem.space;
  if (coords.ndims() != 2 || coords.axes()[0] != Axis::reduced)
    throw ShapeError("coords must have axes (reduced, param)");
  if (coords.extent(0) != rbop.n())
    throw ShapeError("coordinate dimension does not match the operator");
  const int B = static_cast<int>(coords.extent(1));
  const Eigen::Map<const Eigen::MatrixXd> C(coords.data().data(),
                                            coords.extent(0), B);

  Reconstruction out;
  if (!rbop.transient) {
    Eigen::MatrixXd free = rbop.trial.basis * C;
    out.free_field =
        SnapshotTensor::from_matrix(Axis::space, free, coords.echo());
    const BatchPlan plan = BatchPlan::steady(r);
    out.dirichlet =
        interpolate_dirichlet(problem.dirichlet_g, plan, space).values;
  } else {
    const int nf = space.n_free();
    const int nt = r.nsteps();
    Eigen::MatrixXd free(static_cast<Eigen::Index>(nf) * nt, B);
    for (int p = 0; p < B; ++p) {
      const Eigen::VectorXd w = st_expand(rbop.st_trial, C.col(p));
      free.col(p) = w;
    }
    Eigen::VectorXd flat =
        Eigen::Map<const Eigen::VectorXd>(free.data(), free.size());
    out.free_field =
        SnapshotTensor({Axis::space, Axis::time, Axis::param}, {nf, nt, B},
                       std::move(flat), coords.echo());
    const BatchPlan plan = BatchPlan::transient(r);
    out.dirichlet =
        interpolate_dirichlet(problem.dirichlet_g, plan, space).values;
  }
  return out;
}

// --- operator io -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'B', 'O', 'P'};
constexpr std::uint32_t kVersion = 1;

struct Section {
  std::vector<Eigen::Index> dims;
  Eigen::VectorXd data;
};

void add_section(std::map<std::string, Section>& s, const std::string& name,
                 const Eigen::MatrixXd& m) {
  Section sec;
  sec.dims = {m.rows(), m.cols()};
  sec.data = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  s[name] = std::move(sec);
}

void add_section(std::map<std::string, Section>& s, const std::string& name,
                 const Eigen::VectorXd& v) {
  Section sec;
  sec.dims = {v.size()};
  sec.data = v;
  s[name] = std::move(sec);
}

void add_stack(std::map<std::string, Section>& s, const std::string& name,
               const std::vector<Eigen::MatrixXd>& mats) {
  Section sec;
  const Eigen::Index r = mats.empty() ? 0 : mats.front().rows();
  const Eigen::Index c = mats.empty() ? 0 : mats.front().cols();
  sec.dims = {r, c, static_cast<Eigen::Index>(mats.size())};
  sec.data.resize(r * c * static_cast<Eigen::Index>(mats.size()));
  for (size_t k = 0; k < mats.size(); ++k)
    sec.data.segment(static_cast<Eigen::Index>(k) * r * c, r * c) =
        Eigen::Map<const Eigen::VectorXd>(mats[k].data(), r * c);
  s[name] = std::move(sec);
}

void add_ints(std::map<std::string, Section>& s, const std::string& name,
              const std::vector<int>& v) {
  Section sec;
  sec.dims = {static_cast<Eigen::Index>(v.size())};
  sec.data.resize(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i)
    sec.data(static_cast<Eigen::Index>(i)) = v[i];
  s[name] = std::move(sec);
}

void add_targets(std::map<std::string, Section>& s, const std::string& name,
                 const std::vector<EntryTarget>& t) {
  Section sec;
  sec.dims = {2, static_cast<Eigen::Index>(t.size())};
  sec.data.resize(2 * static_cast<Eigen::Index>(t.size()));
  for (size_t i = 0; i < t.size(); ++i) {
    sec.data(2 * static_cast<Eigen::Index>(i)) = t[i].slot;
    sec.data(2 * static_cast<Eigen::Index>(i) + 1) = t[i].step;
  }
  s[name] = std::move(sec);
}

Eigen::MatrixXd get_matrix(const std::map<std::string, Section>& s,
                           const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw FormatError("operator file misses section " + name);
  const auto& sec = it->second;
  if (sec.dims.size() != 2) throw FormatError("section " + name + " is not 2d");
  return Eigen::Map<const Eigen::MatrixXd>(sec.data.data(), sec.dims[0],
                                           sec.dims[1]);
}

Eigen::VectorXd get_vector(const std::map<std::string, Section>& s,
                           const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw FormatError("operator file misses section " + name);
  return it->second.data;
}

std::vector<Eigen::MatrixXd> get_stack(const std::map<std::string, Section>& s,
                                       const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw FormatError("operator file misses section " + name);
  const auto& sec = it->second;
  if (sec.dims.size() != 3) throw FormatError("section " + name + " is not 3d");
  std::vector<Eigen::MatrixXd> out;
  const Eigen::Index r = sec.dims[0], c = sec.dims[1], k = sec.dims[2];
  for (Eigen::Index i = 0; i < k; ++i)
    out.emplace_back(
        Eigen::Map<const Eigen::MatrixXd>(sec.data.data() + i * r * c, r, c));
  return out;
}

std::vector<int> get_ints(const std::map<std::string, Section>& s,
                          const std::string& name) {
  const Eigen::VectorXd v = get_vector(s, name);
  std::vector<int> out(static_cast<size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[static_cast<size_t>(i)] = static_cast<int>(v(i));
  return out;
}

std::vector<EntryTarget> get_targets(const std::map<std::string, Section>& s,
                                     const std::string& name) {
  const auto it = s.find(name);
  if (it == s.end()) throw FormatError("operator file misses section " + name);
  const auto& sec = it->second;
  std::vector<EntryTarget> out(static_cast<size_t>(sec.dims[1]));
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].slot = static_cast<int>(sec.data(2 * static_cast<Eigen::Index>(i)));
    out[i].step =
        static_cast<int>(sec.data(2 * static_cast<Eigen::Index>(i) + 1));
  }
  return out;
}

json echo_to_json(const OperatorEcho& e) {
  json j;
  j["dim"] = e.dim;
  j["cells"] = {e.cells[0], e.cells[1]};
  j["domain"] = {e.domain[0], e.domain[1], e.domain[2], e.domain[3]};
  j["dirichlet"] = e.dirichlet;
  j["transient"] = e.transient;
  j["has_mass"] = e.has_mass;
  j["has_load"] = e.has_load;
  j["has_reaction"] = e.has_reaction;
  j["t0"] = e.t0;
  j["dt"] = e.dt;
  j["nsteps"] = e.nsteps;
  j["theta"] = e.theta;
  j["tol"] = e.tol;
  j["nparams"] = e.nparams;
  j["nparams_res"] = e.nparams_res;
  j["nparams_jac"] = e.nparams_jac;
  j["sampling"] = e.sampling;
  j["seed"] = e.seed;
  j["inner"] = e.inner;
  std::vector<std::vector<double>> pd;
  for (Eigen::Index d = 0; d < e.pdomain.cols(); ++d)
    pd.push_back({e.pdomain(0, d), e.pdomain(1, d)});
  j["pdomain"] = pd;
  return j;
}

OperatorEcho echo_from_json(const json& j) {
  OperatorEcho e;
  e.dim = j.at("dim").get<int>();
  e.cells = {j.at("cells")[0].get<int>(), j.at("cells")[1].get<int>()};
  e.domain = {j.at("domain")[0].get<double>(), j.at("domain")[1].get<double>(),
              j.at("domain")[2].get<double>(), j.at("domain")[3].get<double>()};
  e.dirichlet = j.at("dirichlet").get<int>();
  e.transient = j.at("transient").get<bool>();
  e.has_mass = j.at("has_mass").get<bool>();
  e.has_load = j.at("has_load").get<bool>();
  e.has_reaction = j.at("has_reaction").get<bool>();
  e.t0 = j.at("t0").get<double>();
  e.dt = j.at("dt").get<double>();
  e.nsteps = j.at("nsteps").get<int>();
  e.theta = j.at("theta").get<double>();
  e.tol = j.at("tol").get<double>();
  e.nparams = j.at("nparams").get<int>();
  e.nparams_res = j.at("nparams_res").get<int>();
  e.nparams_jac = j.at("nparams_jac").get<int>();
  e.sampling = j.at("sampling").get<std::uint32_t>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.inner = j.at("inner").get<std::uint32_t>();
  const auto& pd = j.at("pdomain");
  e.pdomain.resize(2, static_cast<Eigen::Index>(pd.size()));
  for (size_t d = 0; d < pd.size(); ++d) {
    e.pdomain(0, static_cast<Eigen::Index>(d)) = pd[d][0].get<double>();
    e.pdomain(1, static_cast<Eigen::Index>(d)) = pd[d][1].get<double>();
  }
  return e;
}

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CorruptionError("operator file truncated");
  return v;
}

}  // namespace

void save_operator(const std::string& path, const ReducedOperator& rbop,
                   const std::string& extra_manifest_json) {
  std::map<std::string, Section> sections;

  json manifest;
  manifest["version"] = kVersion;
  manifest["kind"] = rbop.transient ? "transient" : "steady";
  manifest["echo"] = echo_to_json(rbop.echo);
  manifest["petrov_galerkin"] = rbop.petrov_galerkin;
  manifest["dt"] = rbop.dt;
  if (!extra_manifest_json.empty())
    manifest["config"] = json::parse(extra_manifest_json);

  if (!rbop.transient) {
    manifest["n"] = rbop.trial.n();
    add_section(sections, "trial_basis", rbop.trial.basis);
    add_section(sections, "trial_sv", rbop.trial.singular_values);
    add_section(sections, "test_basis", rbop.test_basis);
  } else {
    manifest["n1"] = rbop.st_trial.n1();
    manifest["n2"] = rbop.st_trial.n2();
    add_section(sections, "st_spatial", rbop.st_trial.spatial);
    add_section(sections, "st_temporal", rbop.st_trial.temporal);
    add_section(sections, "sv_spatial", rbop.st_trial.sv_spatial);
    add_section(sections, "sv_temporal", rbop.st_trial.sv_temporal);
    add_section(sections, "test_basis", rbop.test_basis);
    add_section(sections, "Mhat", rbop.Mhat);
    add_section(sections, "That0", rbop.That0);
    add_section(sections, "That1", rbop.That1);
    add_section(sections, "MtPhi1", rbop.MtPhi1);
  }

  auto dump_hr = [&](const std::string& prefix, const HyperReduction& hr) {
    add_section(sections, prefix + "_basis1", hr.basis1);
    if (hr.structure == HyperReduction::Structure::space_time)
      add_section(sections, prefix + "_basis2", hr.basis2);
    add_targets(sections, prefix + "_targets", hr.targets);
    add_section(sections, prefix + "_interp", hr.interp);
    add_ints(sections, prefix + "_cells", hr.reduced_cells);
    add_ints(sections, prefix + "_times", hr.reduced_times);
    if (hr.kind == HyperReduction::Kind::matrix) {
      add_stack(sections, prefix + "_cores", hr.mat_cores);
      if (hr.structure == HyperReduction::Structure::space_time)
        add_stack(sections, prefix + "_weights", hr.temporal_weights);
    } else if (hr.structure == HyperReduction::Structure::steady) {
      add_section(sections, prefix + "_vec_cores", hr.vec_cores);
    } else {
      add_section(sections, prefix + "_sv_cores", hr.sv_cores);
      add_section(sections, prefix + "_tv_cores", hr.tv_cores);
    }
  };
  dump_hr("res", rbop.res_hr);
  dump_hr("jac", rbop.jac_hr);

  std::vector<std::string> names;
  for (const auto& [name, sec] : sections) names.push_back(name);
  manifest["sections"] = names;

  const std::string text = manifest.dump();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw NotFoundError("cannot open for writing: " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put(os, static_cast<std::uint32_t>(sections.size()));
  for (const auto& [name, sec] : sections) {
    put(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(os, static_cast<std::uint8_t>(sec.dims.size()));
    for (auto d : sec.dims) put(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(sec.data.data()),
             static_cast<std::streamsize>(sizeof(double) *
                                          static_cast<size_t>(sec.data.size())));
  }
  if (!os) throw CorruptionError("short write: " + path);
}

namespace {

json read_header(std::ifstream& is, const std::string& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not an RBOP file: " + path);
  const auto version = get_raw<std::uint32_t>(is);
  if (version != kVersion)
    throw FormatError("unsupported RBOP version " + std::to_string(version));
  const auto len = get_raw<std::uint64_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw CorruptionError("operator manifest truncated");
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("operator manifest is not valid JSON: ") +
                      e.what());
  }
}

}  // namespace

std::string peek_operator_manifest(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw NotFoundError("no such operator file: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open: " + path);
  return read_header(is, path).dump();
}

ReducedOperator load_operator(const std::string& path,
                              std::shared_ptr<const ProblemDef> problem,
                              const OperatorEcho& expected) {
  if (!std::filesystem::exists(path))
    throw NotFoundError("no such operator file: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFoundError("cannot open: " + path);
  const json manifest = read_header(is, path);

  const OperatorEcho echo = echo_from_json(manifest.at("echo"));
  if (!(echo == expected))
    throw CompatibilityError(
        "operator file does not match the problem/config echo");

  std::map<std::string, Section> sections;
  const auto nsec = get_raw<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nsec; ++i) {
    const auto name_len = get_raw<std::uint16_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw CorruptionError("operator section name truncated");
    const auto ndims = get_raw<std::uint8_t>(is);
    Section sec;
    Eigen::Index total = 1;
    for (int d = 0; d < ndims; ++d) {
      const auto e = get_raw<std::uint64_t>(is);
      sec.dims.push_back(static_cast<Eigen::Index>(e));
      total *= static_cast<Eigen::Index>(e);
    }
    sec.data.resize(total);
    is.read(reinterpret_cast<char*>(sec.data.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<size_t>(total)));
    if (!is) throw CorruptionError("operator section payload truncated");
    sections[name] = std::move(sec);
  }

  ReducedOperator op;
  op.problem = problem;
  op.transient = echo.transient;
  op.echo = echo;
  op.petrov_galerkin = manifest.at("petrov_galerkin").get<bool>();
  op.dt = manifest.at("dt").get<double>();

  const Eigen::SparseMatrix<double> X = inner_product_matrix(
      *problem->space, static_cast<InnerProduct>(echo.inner));

  if (!op.transient) {
    op.trial.basis = get_matrix(sections, "trial_basis");
    op.trial.singular_values = get_vector(sections, "trial_sv");
    op.trial.X = X;
    op.trial.tol = echo.tol;
    op.test_basis = get_matrix(sections, "test_basis");
  } else {
    op.st_trial.spatial = get_matrix(sections, "st_spatial");
    op.st_trial.temporal = get_matrix(sections, "st_temporal");
    op.st_trial.sv_spatial = get_vector(sections, "sv_spatial");
    op.st_trial.sv_temporal = get_vector(sections, "sv_temporal");
    op.st_trial.X = X;
    op.st_trial.tol = echo.tol;
    op.test_basis = get_matrix(sections, "test_basis");
    op.Mhat = get_matrix(sections, "Mhat");
    op.That0 = get_matrix(sections, "That0");
    op.That1 = get_matrix(sections, "That1");
    op.MtPhi1 = get_matrix(sections, "MtPhi1");
  }

  auto load_hr = [&](const std::string& prefix, HyperReduction::Kind kind) {
    HyperReduction hr;
    hr.kind = kind;
    hr.structure = op.transient ? HyperReduction::Structure::space_time
                                : HyperReduction::Structure::steady;
    hr.basis1 = get_matrix(sections, prefix + "_basis1");
    if (hr.structure == HyperReduction::Structure::space_time)
      hr.basis2 = get_matrix(sections, prefix + "_basis2");
    hr.targets = get_targets(sections, prefix + "_targets");
    hr.interp = get_matrix(sections, prefix + "_interp");
    hr.reduced_cells = get_ints(sections, prefix + "_cells");
    hr.reduced_times = get_ints(sections, prefix + "_times");
    if (kind == HyperReduction::Kind::matrix) {
      hr.mat_cores = get_stack(sections, prefix + "_cores");
      if (hr.structure == HyperReduction::Structure::space_time)
        hr.temporal_weights = get_stack(sections, prefix + "_weights");
    } else if (hr.structure == HyperReduction::Structure::steady) {
      hr.vec_cores = get_matrix(sections, prefix + "_vec_cores");
    } else {
      hr.sv_cores = get_matrix(sections, prefix + "_sv_cores");
      hr.tv_cores = get_matrix(sections, prefix + "_tv_cores");
    }
    hr.refactor();
    return hr;
  };
  op.res_hr = load_hr("res", HyperReduction::Kind::vector);
  op.jac_hr = load_hr("jac", HyperReduction::Kind::matrix);

  op.prepare();
  return op;
}

}  // namespace rbrom
