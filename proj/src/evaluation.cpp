#include "rbrom/evaluation.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace rbrom {

namespace {

double xnorm(const Eigen::SparseMatrix<double>& X, const Eigen::VectorXd& v) {
  if (X.size() == 0) return v.norm();
  return std::sqrt(v.dot(X * v));
}

}  // namespace

ErrorReport error_measure(const SnapshotTensor& fom, const SnapshotTensor& rom,
                          const Eigen::SparseMatrix<double>& X,
                          bool transient) {
  if (fom.dims() != rom.dims())
    throw ShapeError("error_measure: snapshot shapes differ");

  ErrorReport out;
  if (!transient) {
    const auto U = fom.as_matrix();
    const auto V = rom.as_matrix();
    const int B = static_cast<int>(U.cols());
    out.per_param.resize(B);
    for (int p = 0; p < B; ++p) {
      const double den = xnorm(X, U.col(p));
      if (den == 0.0)
        throw EvalError("error_measure: zero-norm FOM snapshot at parameter " +
                        std::to_string(p));
      out.per_param(p) = xnorm(X, U.col(p) - V.col(p)) / den;
    }
  } else {
    const auto U = fom.mode1();
    const auto V = rom.mode1();
    const Eigen::Index nt = fom.extent(1);
    const int B = static_cast<int>(fom.extent(2));
    out.per_param.resize(B);
    for (int p = 0; p < B; ++p) {
      double acc = 0.0;
      for (Eigen::Index n = 0; n < nt; ++n) {
        const Eigen::Index c = n + nt * p;
        const double den = xnorm(X, U.col(c));
        if (den == 0.0)
          throw EvalError("error_measure: zero-norm FOM snapshot at step " +
                          std::to_string(n + 1) + ", parameter " +
                          std::to_string(p));
        acc += xnorm(X, U.col(c) - V.col(c)) / den;
      }
      // rectangle rule over the steps, normalized by the horizon
      out.per_param(p) = acc / static_cast<double>(nt);
    }
  }
  out.mean = out.per_param.mean();
  return out;
}

PerfReport eval_performance(const ReducedOperator& rbop,
                            const SnapshotTensor& fom_snaps,
                            const RunStats& fom_stats,
                            const SnapshotTensor& coords,
                            const RunStats& rom_stats, const Realization& r,
                            const std::string& config_echo) {
  if (fom_stats.wall_ns == 0 || rom_stats.wall_ns == 0)
    throw ArgumentError("eval_performance: missing run statistics");

  const Reconstruction recon = reconstruct(rbop, coords, r);
  const Eigen::SparseMatrix<double>& X =
      rbop.transient ? rbop.st_trial.X : rbop.trial.X;
  const ErrorReport err =
      error_measure(fom_snaps, recon.free_field, X, rbop.transient);

  PerfReport out;
  out.error = err.mean;
  out.per_param = err.per_param;
  out.su_time = static_cast<double>(fom_stats.wall_ns) /
                static_cast<double>(rom_stats.wall_ns);
  out.su_mem = rom_stats.alloc_bytes == 0
                   ? 0.0
                   : static_cast<double>(fom_stats.alloc_bytes) /
                         static_cast<double>(rom_stats.alloc_bytes);
  out.config_echo = config_echo;
  return out;
}

void write_perf_json(const std::string& path, const PerfReport& report) {
  nlohmann::json j;
  j["error"] = report.error;
  j["speedup_time"] = report.su_time;
  j["speedup_memory"] = report.su_mem;
  std::vector<double> pp(report.per_param.data(),
                         report.per_param.data() + report.per_param.size());
  j["per_param_errors"] = pp;
  if (!report.config_echo.empty())
    j["config"] = nlohmann::json::parse(report.config_echo);
  else
    j["config"] = nullptr;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw NotFoundError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

void write_perf_csv(const std::string& path, const PerfReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw NotFoundError("cannot open for writing: " + path);
  os << "error,speedup_time,speedup_memory\n";
  os << report.error << "," << report.su_time << "," << report.su_mem << "\n";
  os << "param,error\n";
  for (Eigen::Index p = 0; p < report.per_param.size(); ++p)
    os << p << "," << report.per_param(p) << "\n";
}

}  // namespace rbrom
