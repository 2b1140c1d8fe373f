#include "rbrom/bench.hpp"

#include <fstream>

#include "rbrom/stats.hpp"

namespace rbrom {

namespace {

WeakFormKernel bench_stiffness() {
  return WeakFormKernel(
      KernelKind::stiffness,
      [](std::span<const double> mu, double, const std::array<double, 2>& x) {
        return mu[0] * x[0] + mu[1] * x[1];
      },
      2, true, false);
}

WeakFormKernel bench_load() {
  return WeakFormKernel(
      KernelKind::load,
      [](std::span<const double> mu, double, const std::array<double, 2>& x) {
        return mu[0] + mu[1] * x[0];
      },
      2, true, false);
}

struct Measurement {
  std::uint64_t wall_ns = 0;
  std::uint64_t alloc_bytes = 0;
};

}  // namespace

std::vector<BenchRow> bench_assembly(std::span<const int> sizes,
                                     std::span<const int> params, int reps) {
  if (sizes.empty() || params.empty())
    throw ArgumentError("bench_assembly: sizes and params must be nonempty");
  reps = std::max(reps, 1);

  std::vector<BenchRow> rows;
  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  const WeakFormKernel stiff = bench_stiffness();
  const WeakFormKernel load = bench_load();

  for (int size : sizes) {
    const std::array<double, 4> domain = {0.0, 1.0, 0.0, 1.0};
    const std::array<int, 2> cells = {size, size};
    for (int P : params) {
      const Realization r = sample_realization(box, P, Sampling::halton, 0);
      const BatchPlan plan = BatchPlan::steady(r);

      auto run_inclusive = [&](bool batched) {
        Measurement best{UINT64_MAX, 0};
        std::uint64_t alloc_sum = 0;
        for (int rep = 0; rep < reps; ++rep) {
          // fresh space so pattern construction counts as global setup
          FESpaceDef space(build_mesh(domain, cells), DirichletTag::boundary);
          std::vector<VectorTerm> terms = {
              {&load, ElemMode::vector, 1.0, nullptr}};
          mem::Meter meter;
          Timer timer;
          if (batched) {
            auto J = assemble_batched_matrix({&stiff, 1}, plan, space);
            auto b = assemble_batched_vector(terms, plan, space);
            (void)J;
            (void)b;
          } else {
            auto J = assemble_naive_matrix({&stiff, 1}, plan, space);
            auto b = assemble_naive_vector(terms, plan, space);
            (void)J;
            (void)b;
          }
          const auto wall = timer.ns();
          best.wall_ns = std::min(best.wall_ns, wall);
          alloc_sum += meter.bytes();
        }
        best.alloc_bytes = alloc_sum / static_cast<std::uint64_t>(reps);
        return best;
      };

      auto run_noglobal = [&](bool batched) {
        FESpaceDef space(build_mesh(domain, cells), DirichletTag::boundary);
        std::vector<VectorTerm> terms = {{&load, ElemMode::vector, 1.0, nullptr}};
        // warm the pattern and the global structures
        BatchedSparseCsc J = batched
                                 ? assemble_batched_matrix({&stiff, 1}, plan, space)
                                 : assemble_naive_matrix({&stiff, 1}, plan, space);
        BatchedVector b = batched
                              ? assemble_batched_vector(terms, plan, space)
                              : assemble_naive_vector(terms, plan, space);
        Measurement best{UINT64_MAX, 0};
        std::uint64_t alloc_sum = 0;
        for (int rep = 0; rep < reps; ++rep) {
          mem::Meter meter;
          Timer timer;
          if (batched) {
            J = assemble_batched_matrix({&stiff, 1}, plan, space, {}, nullptr, &J);
            b = assemble_batched_vector(terms, plan, space, {}, &b);
          } else {
            J = assemble_naive_matrix({&stiff, 1}, plan, space, {}, nullptr, &J);
            b = assemble_naive_vector(terms, plan, space, {}, &b);
          }
          const auto wall = timer.ns();
          best.wall_ns = std::min(best.wall_ns, wall);
          alloc_sum += meter.bytes();
        }
        best.alloc_bytes = alloc_sum / static_cast<std::uint64_t>(reps);
        return best;
      };

      const Measurement mb = run_inclusive(true);
      const Measurement mn = run_inclusive(false);
      const Measurement mbx = run_noglobal(true);
      const Measurement mnx = run_noglobal(false);
      rows.push_back({size, P, "batched", mb.wall_ns, mb.alloc_bytes});
      rows.push_back({size, P, "naive", mn.wall_ns, mn.alloc_bytes});
      rows.push_back({size, P, "batched_noglobal", mbx.wall_ns, mbx.alloc_bytes});
      rows.push_back({size, P, "naive_noglobal", mnx.wall_ns, mnx.alloc_bytes});
    }
  }
  return rows;
}

void write_bench_csv(const std::string& path, std::span<const BenchRow> rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw NotFoundError("cannot open for writing: " + path);
  os << "size,P,path,wall_ns,alloc_bytes\n";
  for (const auto& row : rows)
    os << row.size << "," << row.nparams << "," << row.path << ","
       << row.wall_ns << "," << row.alloc_bytes << "\n";
}

}  // namespace rbrom
