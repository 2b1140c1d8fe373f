#include "rbrom/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace rbrom {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  reject_unknown(j,
                 {"problem", "domain", "cells", "pdomain", "tdomain", "theta",
                  "tol", "nparams", "nparams_res", "nparams_jac", "sampling",
                  "seed", "inner_product", "newton", "out"},
                 "config");

  RunConfig cfg;
  try {
    cfg.problem = j.at("problem").get<std::string>();
    cfg.domain = j.at("domain").get<std::vector<double>>();
    cfg.cells = j.at("cells").get<std::vector<int>>();
    for (const auto& pair : j.at("pdomain")) {
      if (!pair.is_array() || pair.size() != 2)
        throw ConfigError("pdomain entries must be [lo, hi] pairs");
      cfg.pdomain.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    if (j.contains("tdomain")) {
      const auto& td = j.at("tdomain");
      reject_unknown(td, {"t0", "dt", "nsteps"}, "tdomain");
      cfg.has_tdomain = true;
      cfg.t0 = td.at("t0").get<double>();
      cfg.dt = td.at("dt").get<double>();
      cfg.nsteps = td.at("nsteps").get<int>();
    }
    if (j.contains("theta")) cfg.theta = j.at("theta").get<double>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("nparams")) cfg.nparams = j.at("nparams").get<int>();
    if (j.contains("nparams_res"))
      cfg.nparams_res = j.at("nparams_res").get<int>();
    if (j.contains("nparams_jac"))
      cfg.nparams_jac = j.at("nparams_jac").get<int>();
    if (j.contains("sampling"))
      cfg.sampling = sampling_from_string(j.at("sampling").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("inner_product"))
      cfg.inner =
          inner_product_from_string(j.at("inner_product").get<std::string>());
    if (j.contains("newton")) {
      const auto& nw = j.at("newton");
      reject_unknown(nw, {"eps", "max_iter"}, "newton");
      if (nw.contains("eps")) cfg.newton_eps = nw.at("eps").get<double>();
      if (nw.contains("max_iter"))
        cfg.newton_max_iter = nw.at("max_iter").get<int>();
    }
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  // validation before any compute
  if (cfg.cells.empty() || cfg.cells.size() > 2)
    throw ConfigError("cells must list 1 or 2 axes");
  if (cfg.domain.size() != 2 * cfg.cells.size())
    throw ConfigError("domain must list (lo, hi) per axis");
  for (int c : cfg.cells)
    if (c < 1) throw ConfigError("cells must be positive");
  if (cfg.pdomain.empty()) throw ConfigError("pdomain must be nonempty");
  for (const auto& [lo, hi] : cfg.pdomain)
    if (!(lo < hi)) throw ConfigError("pdomain needs lo < hi");
  if (cfg.has_tdomain && (cfg.nsteps < 1 || !(cfg.dt > 0.0)))
    throw ConfigError("tdomain needs dt > 0 and nsteps >= 1");
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0)
    throw ConfigError("theta must lie in (0, 1]");
  if (!(cfg.tol > 0.0 && cfg.tol < 1.0))
    throw ConfigError("tol must lie in (0, 1)");
  if (cfg.nparams < 1) throw ConfigError("nparams must be >= 1");
  if (cfg.nparams_res < 1 || cfg.nparams_res > cfg.nparams)
    throw ConfigError("nparams_res must lie in [1, nparams]");
  if (cfg.nparams_jac < 1 || cfg.nparams_jac > cfg.nparams)
    throw ConfigError("nparams_jac must lie in [1, nparams]");
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("no such config file: " + path);
  std::ifstream is(path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json_text() const {
  json j;
  j["problem"] = problem;
  j["domain"] = domain;
  j["cells"] = cells;
  std::vector<std::vector<double>> pd;
  for (const auto& [lo, hi] : pdomain) pd.push_back({lo, hi});
  j["pdomain"] = pd;
  if (has_tdomain)
    j["tdomain"] = {{"t0", t0}, {"dt", dt}, {"nsteps", nsteps}};
  j["theta"] = theta;
  j["tol"] = tol;
  j["nparams"] = nparams;
  j["nparams_res"] = nparams_res;
  j["nparams_jac"] = nparams_jac;
  j["sampling"] = to_string(sampling);
  j["seed"] = seed;
  j["inner_product"] = to_string(inner);
  j["newton"] = {{"eps", newton_eps}, {"max_iter", newton_max_iter}};
  if (!out.empty()) j["out"] = out;
  return j.dump();
}

Realization ProblemBundle::sample(int nparams, Sampling strategy,
                                  std::uint64_t seed) const {
  if (tspace) return sample_realization(*tspace, nparams, strategy, seed);
  return sample_realization(*pspace, nparams, strategy, seed);
}

ProblemBundle build_problem(const RunConfig& cfg) {
  if (cfg.pdomain.size() != 2)
    throw ConfigError("the built-in problems use two parameters");
  if (cfg.cells.size() != 2)
    throw ConfigError("the built-in problems are two-dimensional");

  ProblemBundle bundle;
  auto problem = std::make_shared<ProblemDef>();
  auto space = std::make_shared<FESpaceDef>(
      build_mesh(cfg.domain, cfg.cells), DirichletTag::boundary);
  problem->space = space;

  ParamSpace pspace(
      {cfg.pdomain.begin(), cfg.pdomain.end()});

  if (cfg.problem == "poisson2d") {
    problem->transient = false;
    problem->stiffness = WeakFormKernel(
        KernelKind::stiffness,
        [](std::span<const double> mu, double, const std::array<double, 2>& x) {
          return mu[0] * x[0] + mu[1] * x[1];
        },
        2, true, false);
    problem->load =
        WeakFormKernel(KernelKind::load, constant_coeff(1.0), 2, false, false);
    problem->dirichlet_g = constant_coeff(0.0);
  } else if (cfg.problem == "heat2d") {
    if (!cfg.has_tdomain) throw ConfigError("heat2d needs a tdomain");
    problem->transient = true;
    problem->stiffness = WeakFormKernel(KernelKind::stiffness,
                                        constant_coeff(1.0), 2, false, false);
    problem->mass =
        WeakFormKernel(KernelKind::mass, constant_coeff(1.0), 2, false, false);
    // source and boundary data of the field t*(mu1*x1^2 + mu2*x2^2)
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
    problem->zero_initial = true;
  } else if (cfg.problem == "nonlinear_reaction2d") {
    problem->transient = false;
    problem->stiffness = WeakFormKernel(KernelKind::stiffness,
                                        constant_coeff(1.0), 2, false, false);
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
  } else {
    throw ConfigError("unknown problem: " + cfg.problem);
  }

  if (!problem->dirichlet_g) problem->dirichlet_g = constant_coeff(0.0);
  if (!problem->initial_u0) problem->initial_u0 = constant_coeff(0.0);
  problem->validate();

  if (problem->transient) {
    std::vector<double> grid(static_cast<size_t>(cfg.nsteps) + 1);
    for (int n = 0; n <= cfg.nsteps; ++n)
      grid[static_cast<size_t>(n)] = cfg.t0 + n * cfg.dt;
    bundle.tspace = TransientParamSpace(pspace, std::move(grid));
  } else {
    bundle.pspace = pspace;
  }
  bundle.problem = std::move(problem);
  return bundle;
}

ReductionConfig reduction_config(const RunConfig& cfg) {
  ReductionConfig r;
  r.tol = cfg.tol;
  r.nparams = cfg.nparams;
  r.nparams_res = cfg.nparams_res;
  r.nparams_jac = cfg.nparams_jac;
  r.inner = cfg.inner;
  r.solver.theta = cfg.theta;
  r.solver.eps = cfg.newton_eps;
  r.solver.max_iter = cfg.newton_max_iter;
  return r;
}

}  // namespace rbrom
