#pragma once

#include <string>

#include "rbrom/rom_solver.hpp"

namespace rbrom {

struct ErrorReport {
  double mean = 0.0;
  Eigen::VectorXd per_param;
};

/// Relative error in the X-norm. Steady: mean over parameters of
/// ||u_h - u_n||_X / ||u_h||_X. Transient: per parameter, the per-step norm
/// ratio integrated with the rectangle rule over the solver steps and
/// normalized by the horizon, then averaged over the parameters.
ErrorReport error_measure(const SnapshotTensor& fom, const SnapshotTensor& rom,
                          const Eigen::SparseMatrix<double>& X, bool transient);

struct PerfReport {
  double error = 0.0;
  double su_time = 0.0;
  double su_mem = 0.0;
  Eigen::VectorXd per_param;
  std::string config_echo;  // JSON text, echoed verbatim into the report
};

/// Error and online speedups versus the full-order model; both runs must
/// cover the same online realization. su_time/su_mem are ratios of the mean
/// per-parameter wall time / tallied allocation bytes.
PerfReport eval_performance(const ReducedOperator& rbop,
                            const SnapshotTensor& fom_snaps,
                            const RunStats& fom_stats,
                            const SnapshotTensor& coords,
                            const RunStats& rom_stats, const Realization& r,
                            const std::string& config_echo = "");

void write_perf_json(const std::string& path, const PerfReport& report);
void write_perf_csv(const std::string& path, const PerfReport& report);

}  // namespace rbrom
