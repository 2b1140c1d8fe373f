#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbrom/assembly.hpp"

namespace rbrom {

struct BenchRow {
  int size = 0;
  int nparams = 0;
  std::string path;  // batched | naive | batched_noglobal | naive_noglobal
  std::uint64_t wall_ns = 0;
  std::uint64_t alloc_bytes = 0;
};

/// Assembly cost benchmark over square meshes: residual + Jacobian of the
/// model stiffness form, batched vs naive. Inclusive rows cover everything
/// (pattern and global structures included); *_noglobal rows reuse warmed
/// globals. Rows aggregate repetitions by minimum wall time and mean
/// allocation bytes.
std::vector<BenchRow> bench_assembly(std::span<const int> sizes,
                                     std::span<const int> params, int reps);

void write_bench_csv(const std::string& path, std::span<const BenchRow> rows);

}  // namespace rbrom
