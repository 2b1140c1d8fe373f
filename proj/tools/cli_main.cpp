#include "cli_main.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rbrom/bench.hpp"
#include "rbrom/config.hpp"
#include "rbrom/evaluation.hpp"

namespace rbrom {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  for (char c : text) {
    if (c == ',') {
      if (!token.empty()) out.push_back(std::stoi(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(std::stoi(token));
  if (out.empty()) throw ConfigError("empty integer list: " + text);
  return out;
}

struct LoadedOperator {
  RunConfig cfg;
  ProblemBundle bundle;
  ReducedOperator op;
};

// reads the manifest, rebuilds the problem from the embedded config, then
// loads with the compatibility check
LoadedOperator load_from_dir(const std::string& dir) {
  const std::string path = (fs::path(dir) / "operator.rbop").string();
  const json manifest = json::parse(peek_operator_manifest(path));
  if (!manifest.contains("config") || manifest["config"].is_null())
    throw FormatError("operator manifest carries no run config");
  LoadedOperator out{RunConfig::from_json_text(manifest["config"].dump()),
                     {}, {}};
  out.bundle = build_problem(out.cfg);
  const ReductionConfig rcfg = reduction_config(out.cfg);
  const Realization offline =
      out.bundle.sample(out.cfg.nparams, out.cfg.sampling, out.cfg.seed);
  const OperatorEcho expected =
      make_echo(*out.bundle.problem, rcfg, offline);
  out.op = load_operator(path, out.bundle.problem, expected);
  return out;
}

int run_offline(const std::string& config_path, std::string out_dir) {
  const RunConfig cfg = RunConfig::from_file(config_path);
  if (out_dir.empty()) out_dir = cfg.out;
  if (out_dir.empty())
    throw ConfigError("offline needs --out or an 'out' config entry");
  fs::create_directories(out_dir);

  ProblemBundle bundle = build_problem(cfg);
  const ReductionConfig rcfg = reduction_config(cfg);
  const Realization offline =
      bundle.sample(cfg.nparams, cfg.sampling, cfg.seed);
  const OperatorEcho expected = make_echo(*bundle.problem, rcfg, offline);
  const std::string op_path = (fs::path(out_dir) / "operator.rbop").string();

  try {
    const ReducedOperator op =
        load_operator(op_path, bundle.problem, expected);
    std::cout << "loaded operator from " << op_path << " (n = " << op.n()
              << ")\n";
    return 0;
  } catch (const NotFoundError&) {
    // first run: fall through to the offline build
  } catch (const CompatibilityError&) {
    std::cout << "stored operator is incompatible, rebuilding\n";
  }

  Timer offline_timer;
  Collected snaps;
  const ReducedOperator op =
      build_reduced_operator(rcfg, bundle.problem, offline, &snaps);
  const auto offline_wall = offline_timer.ns();
  save_operator(op_path, op, cfg.to_json_text());
  save_snapshot((fs::path(out_dir) / "solution_snapshots.rbsn").string(),
                snaps.solutions);

  json stats;
  stats["offline_wall_ns"] = offline_wall;
  stats["fom_wall_ns"] = snaps.stats.wall_ns;
  stats["fom_alloc_bytes"] = snaps.stats.alloc_bytes;
  stats["n"] = op.n();
  stats["n1"] = op.n1();
  stats["n2"] = op.n2();
  std::ofstream os(fs::path(out_dir) / "offline_stats.json");
  os << stats.dump(2) << "\n";

  std::cout << "built operator " << op_path << " (n = " << op.n();
  if (op.transient)
    std::cout << " = " << op.n1() << " x " << op.n2();
  std::cout << ", res terms = " << op.res_hr.n_terms()
            << ", jac terms = " << op.jac_hr.n_terms() << ")\n";
  return 0;
}

int run_online(const std::string& op_dir, const std::string& out_dir,
               int nparams, const std::string& sampling, std::uint64_t seed,
               double eps, int max_iter) {
  LoadedOperator lo = load_from_dir(op_dir);
  fs::create_directories(out_dir);

  const Realization online =
      lo.bundle.sample(nparams, sampling_from_string(sampling), seed);
  const OnlineResult result = online_solve(lo.op, online, eps, max_iter);
  const Reconstruction recon = reconstruct(lo.op, result.coords, online);

  save_snapshot((fs::path(out_dir) / "coords.rbsn").string(), result.coords);
  save_snapshot((fs::path(out_dir) / "reconstruction.rbsn").string(),
                recon.free_field);

  json stats;
  stats["wall_ns"] = result.stats.wall_ns;
  stats["alloc_bytes"] = result.stats.alloc_bytes;
  stats["iterations"] = result.stats.iterations;
  stats["nparams"] = nparams;
  stats["sampling"] = sampling;
  stats["seed"] = seed;
  std::ofstream os(fs::path(out_dir) / "online_stats.json");
  os << stats.dump(2) << "\n";

  std::cout << "solved " << nparams << " online parameters (n = " << lo.op.n()
            << ", wall = " << result.stats.wall_ns << " ns)\n";
  return 0;
}

int run_eval(const std::string& op_dir, const std::string& online_dir) {
  LoadedOperator lo = load_from_dir(op_dir);

  json ostats;
  {
    std::ifstream is(fs::path(online_dir) / "online_stats.json");
    if (!is) throw NotFoundError("missing online_stats.json in " + online_dir);
    is >> ostats;
  }
  const Realization online = lo.bundle.sample(
      ostats.at("nparams").get<int>(),
      sampling_from_string(ostats.at("sampling").get<std::string>()),
      ostats.at("seed").get<std::uint64_t>());
  RunStats rom_stats;
  rom_stats.wall_ns = ostats.at("wall_ns").get<std::uint64_t>();
  rom_stats.alloc_bytes = ostats.at("alloc_bytes").get<std::uint64_t>();

  const SnapshotTensor coords =
      load_snapshot((fs::path(online_dir) / "coords.rbsn").string());

  const ReductionConfig rcfg = reduction_config(lo.cfg);
  const Collected fom = collect_snapshots(*lo.bundle.problem, rcfg.solver, online);

  const PerfReport perf =
      eval_performance(lo.op, fom.solutions, fom.stats, coords, rom_stats,
                       online, lo.cfg.to_json_text());
  write_perf_json((fs::path(online_dir) / "perf.json").string(), perf);
  write_perf_csv((fs::path(online_dir) / "perf.csv").string(), perf);

  std::cout << "----- performance -----\n"
            << "> error: " << perf.error << "\n"
            << "> speedup in time: " << perf.su_time << "\n"
            << "> speedup in memory: " << perf.su_mem << "\n"
            << "-----\n";
  return 0;
}

int run_bench(const std::string& sizes, const std::string& params, int reps,
              const std::string& out_csv) {
  const auto rows =
      bench_assembly(parse_int_list(sizes), parse_int_list(params), reps);
  write_bench_csv(out_csv, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"reduced-order modeling driver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, op_dir, online_dir;
  std::string sampling = "uniform";
  std::string sizes = "8,16", params = "1,2,4,8", bench_out = "bench.csv";
  int nparams = 10, max_iter = 25, reps = 5;
  std::uint64_t seed = 4321;
  double eps = 1e-10;

  auto* offline = app.add_subcommand("offline", "collect snapshots and build the operator");
  offline->add_option("--config", config_path, "run config JSON")->required();
  offline->add_option("--out", out_dir, "output directory");

  auto* online = app.add_subcommand("online", "solve the hyper-reduced system");
  online->add_option("--op", op_dir, "operator directory")->required();
  online->add_option("--out", online_dir, "output directory")->required();
  online->add_option("--nparams", nparams, "number of online parameters");
  online->add_option("--sampling", sampling, "sampling strategy");
  online->add_option("--seed", seed, "sampling seed");
  online->add_option("--eps", eps, "Newton tolerance");
  online->add_option("--max-iter", max_iter, "Newton iteration cap");

  auto* eval = app.add_subcommand("eval", "error and speedup vs the FOM");
  eval->add_option("--op", op_dir, "operator directory")->required();
  eval->add_option("--online", online_dir, "online output directory")->required();

  auto* bench = app.add_subcommand("bench", "assembly cost benchmark");
  bench->add_option("--sizes", sizes, "comma-separated mesh sizes");
  bench->add_option("--params", params, "comma-separated parameter counts");
  bench->add_option("--reps", reps, "repetitions per measurement");
  bench->add_option("--out", bench_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (offline->parsed()) return run_offline(config_path, out_dir);
    if (online->parsed())
      return run_online(op_dir, online_dir, nparams, sampling, seed, eps,
                        max_iter);
    if (eval->parsed()) return run_eval(op_dir, online_dir);
    if (bench->parsed()) return run_bench(sizes, params, reps, bench_out);
  } catch (const ConfigError& e) {
    std::cerr << "error kind=config msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error kind=argument msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const NotFoundError& e) {
    std::cerr << "error kind=not_found msg=\"" << e.what() << "\"\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error kind=compute msg=\"" << e.what() << "\"\n";
    return 3;
  }
  return 2;
}

int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"rbrom"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rbrom
