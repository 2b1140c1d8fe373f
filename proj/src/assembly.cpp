#include "rbrom/assembly.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "rbrom/stats.hpp"

namespace rbrom {

namespace {

std::vector<int> all_cells_list(const CartesianMesh& mesh) {
  std::vector<int> cells(static_cast<size_t>(mesh.num_cells()));
  for (int e = 0; e < mesh.num_cells(); ++e) cells[static_cast<size_t>(e)] = e;
  return cells;
}

void check_cells(std::span<const int> cells, int ne) {
  for (int e : cells)
    if (e < 0 || e >= ne)
      throw AssemblyError("cell id out of range: " + std::to_string(e));
}

// local flat index of elemental entry (a, b), column-major like ParamBlock
inline int flat(int a, int b, int vpc) { return a + vpc * b; }

}  // namespace

BatchedSparseCsc assemble_batched_matrix(std::span<const WeakFormKernel> kernels,
                                         const BatchPlan& plan,
                                         const FESpaceDef& space,
                                         std::span<const int> cells,
                                         const Eigen::MatrixXd* state,
                                         BatchedSparseCsc* reuse) {
  if (kernels.empty()) throw ArgumentError("no kernels to assemble");
  const auto& data = space.assembly_data();
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();
  const int B = plan.size();

  BatchedSparseCsc result;
  if (reuse != nullptr && reuse->pattern == data.pattern &&
      reuse->values.rows() == data.pattern->nnz() &&
      reuse->values.cols() == B) {
    result = std::move(*reuse);
    result.values.setZero();
  } else {
    result.pattern = data.pattern;
    result.values.setZero(data.pattern->nnz(), B);
    mem::note(sizeof(double) * static_cast<size_t>(result.values.size()));
  }

  std::vector<ElementalBatch> batches;
  std::vector<ParamBlock> caches;
  batches.reserve(kernels.size());
  for (const auto& k : kernels)
    batches.emplace_back(k, plan, space, ElemMode::matrix, state);
  caches.push_back(batches.front().make_cache());
  auto& cache = caches.front();

  std::vector<int> all;
  if (cells.empty()) {
    all = all_cells_list(mesh);
    cells = all;
  } else {
    check_cells(cells, mesh.num_cells());
  }

  // Alg. 1: in-place fetch per cell, then scatter every parameter.
  for (int e : cells) {
    batches.front().fetch(e, cache);
    for (size_t k = 1; k < batches.size(); ++k) batches[k].fetch_add(e, cache);
    for (int a = 0; a < vpc; ++a)
      for (int b = 0; b < vpc; ++b) {
        const int slot =
            data.cell_slots[(static_cast<size_t>(e) * vpc + a) * vpc + b];
        if (slot < 0) continue;
        result.values.row(slot) += cache.data.row(flat(a, b, vpc));
      }
  }
  return result;
}

BatchedVector assemble_batched_vector(std::span<const VectorTerm> terms,
                                      const BatchPlan& plan,
                                      const FESpaceDef& space,
                                      std::span<const int> cells,
                                      BatchedVector* reuse) {
  if (terms.empty()) throw ArgumentError("no terms to assemble");
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();
  const int B = plan.size();

  BatchedVector result;
  if (reuse != nullptr && reuse->values.rows() == space.n_free() &&
      reuse->values.cols() == B) {
    result = std::move(*reuse);
    result.values.setZero();
  } else {
    result.values.setZero(space.n_free(), B);
    mem::note(sizeof(double) * static_cast<size_t>(result.values.size()));
  }

  std::vector<ElementalBatch> batches;
  batches.reserve(terms.size());
  for (const auto& t : terms)
    batches.emplace_back(*t.kernel, plan, space, t.mode, t.state);
  ParamBlock cache = batches.front().make_cache();

  std::vector<int> all;
  if (cells.empty()) {
    all = all_cells_list(mesh);
    cells = all;
  } else {
    check_cells(cells, mesh.num_cells());
  }

  std::array<int, 4> verts{};
  for (int e : cells) {
    cache.data.setZero();
    for (size_t k = 0; k < batches.size(); ++k)
      batches[k].fetch_add(e, cache, terms[k].scale);
    mesh.cell_vertices(e, verts);
    for (int a = 0; a < vpc; ++a) {
      const int r = space.free_index(verts[static_cast<size_t>(a)]);
      if (r < 0) continue;
      result.values.row(r) += cache.data.row(a);
    }
  }
  return result;
}

BatchedSparseCsc assemble_naive_matrix(std::span<const WeakFormKernel> kernels,
                                       const BatchPlan& plan,
                                       const FESpaceDef& space,
                                       std::span<const int> cells,
                                       const Eigen::MatrixXd* state,
                                       BatchedSparseCsc* reuse) {
  if (kernels.empty()) throw ArgumentError("no kernels to assemble");
  const auto& data = space.assembly_data();
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();
  const int B = plan.size();

  BatchedSparseCsc result;
  if (reuse != nullptr && reuse->pattern == data.pattern &&
      reuse->values.rows() == data.pattern->nnz() &&
      reuse->values.cols() == B) {
    result = std::move(*reuse);
    result.values.setZero();
  } else {
    result.pattern = data.pattern;
    result.values.setZero(data.pattern->nnz(), B);
    mem::note(sizeof(double) * static_cast<size_t>(result.values.size()));
  }

  std::vector<int> all;
  if (cells.empty()) {
    all = all_cells_list(mesh);
    cells = all;
  } else {
    check_cells(cells, mesh.num_cells());
  }

  // Alg. 2: outer loop over the parameters; integration re-run and caches
  // re-allocated for every one of them.
  for (int p = 0; p < B; ++p) {
    const auto& pt = plan.points[static_cast<size_t>(p)];
    BatchPlan one = BatchPlan::single(*plan.realization, pt.param, pt.t, pt.step);
    Eigen::MatrixXd state_p;
    if (state != nullptr) {
      state_p = state->col(p);
      mem::note(sizeof(double) * static_cast<size_t>(state_p.size()));
    }
    std::vector<ElementalBatch> batches;
    batches.reserve(kernels.size());
    for (const auto& k : kernels)
      batches.emplace_back(k, one, space, ElemMode::matrix,
                           state != nullptr ? &state_p : nullptr);
    ParamBlock cache = batches.front().make_cache();

    for (int e : cells) {
      batches.front().fetch(e, cache);
      for (size_t k = 1; k < batches.size(); ++k) batches[k].fetch_add(e, cache);
      for (int a = 0; a < vpc; ++a)
        for (int b = 0; b < vpc; ++b) {
          const int slot =
              data.cell_slots[(static_cast<size_t>(e) * vpc + a) * vpc + b];
          if (slot < 0) continue;
          result.values(slot, p) += cache.data(flat(a, b, vpc), 0);
        }
    }
  }
  return result;
}

BatchedVector assemble_naive_vector(std::span<const VectorTerm> terms,
                                    const BatchPlan& plan,
                                    const FESpaceDef& space,
                                    std::span<const int> cells,
                                    BatchedVector* reuse) {
  if (terms.empty()) throw ArgumentError("no terms to assemble");
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();
  const int B = plan.size();

  BatchedVector result;
  if (reuse != nullptr && reuse->values.rows() == space.n_free() &&
      reuse->values.cols() == B) {
    result = std::move(*reuse);
    result.values.setZero();
  } else {
    result.values.setZero(space.n_free(), B);
    mem::note(sizeof(double) * static_cast<size_t>(result.values.size()));
  }

  std::vector<int> all;
  if (cells.empty()) {
    all = all_cells_list(mesh);
    cells = all;
  } else {
    check_cells(cells, mesh.num_cells());
  }

  std::array<int, 4> verts{};
  for (int p = 0; p < B; ++p) {
    const auto& pt = plan.points[static_cast<size_t>(p)];
    BatchPlan one = BatchPlan::single(*plan.realization, pt.param, pt.t, pt.step);
    std::vector<Eigen::MatrixXd> states_p;
    states_p.reserve(terms.size());
    std::vector<ElementalBatch> batches;
    batches.reserve(terms.size());
    for (const auto& t : terms) {
      const Eigen::MatrixXd* sp = nullptr;
      if (t.state != nullptr) {
        states_p.emplace_back(t.state->col(p));
        mem::note(sizeof(double) * static_cast<size_t>(states_p.back().size()));
        sp = &states_p.back();
      }
      batches.emplace_back(*t.kernel, one, space, t.mode, sp);
    }
    ParamBlock cache = batches.front().make_cache();

    for (int e : cells) {
      cache.data.setZero();
      for (size_t k = 0; k < batches.size(); ++k)
        batches[k].fetch_add(e, cache, terms[k].scale);
      mesh.cell_vertices(e, verts);
      for (int a = 0; a < vpc; ++a) {
        const int r = space.free_index(verts[static_cast<size_t>(a)]);
        if (r < 0) continue;
        result.values(r, p) += cache.data(a, 0);
      }
    }
  }
  return result;
}

BatchedSparseCsc assemble_batched_fd(std::span<const WeakFormKernel> kernels,
                                     const BatchPlan& plan,
                                     const FESpaceDef& space,
                                     const Eigen::MatrixXd* state) {
  if (kernels.empty()) throw ArgumentError("no kernels to assemble");
  const auto& data = space.assembly_data();
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();

  BatchedSparseCsc result;
  result.pattern = data.pattern_fd;
  result.values.setZero(data.pattern_fd->nnz(), plan.size());
  mem::note(sizeof(double) * static_cast<size_t>(result.values.size()));

  std::vector<ElementalBatch> batches;
  for (const auto& k : kernels)
    batches.emplace_back(k, plan, space, ElemMode::matrix, state);
  ParamBlock cache = batches.front().make_cache();

  for (int e = 0; e < mesh.num_cells(); ++e) {
    batches.front().fetch(e, cache);
    for (size_t k = 1; k < batches.size(); ++k) batches[k].fetch_add(e, cache);
    for (int a = 0; a < vpc; ++a)
      for (int b = 0; b < vpc; ++b) {
        const int slot =
            data.cell_slots_fd[(static_cast<size_t>(e) * vpc + a) * vpc + b];
        if (slot < 0) continue;
        result.values.row(slot) += cache.data.row(flat(a, b, vpc));
      }
  }
  return result;
}

ReducedDomain reduced_integration_domain(std::span<const EntryTarget> targets,
                                         const SparsityPattern* pattern,
                                         const FESpaceDef& space) {
  const auto& data = space.assembly_data();
  const auto& mesh = space.mesh();
  std::set<int> cells;
  std::set<int> steps;
  std::array<int, 4> verts{};

  for (const auto& tg : targets) {
    if (tg.step > 0) steps.insert(tg.step);
    if (pattern != nullptr) {
      const auto [row, col] = slot_row_col(*pattern, tg.slot);
      const int va = space.free_dofs()[static_cast<size_t>(row)];
      const int vb = space.free_dofs()[static_cast<size_t>(col)];
      for (int e : data.vertex_cells[static_cast<size_t>(va)]) {
        mesh.cell_vertices(e, verts);
        const auto end = verts.begin() + mesh.verts_per_cell();
        if (std::find(verts.begin(), end, vb) != end) cells.insert(e);
      }
    } else {
      if (tg.slot < 0 || tg.slot >= space.n_free())
        throw ArgumentError("dof target out of range");
      const int v = space.free_dofs()[static_cast<size_t>(tg.slot)];
      for (int e : data.vertex_cells[static_cast<size_t>(v)]) cells.insert(e);
    }
  }

  ReducedDomain dom;
  dom.cells.assign(cells.begin(), cells.end());
  dom.time_steps.assign(steps.begin(), steps.end());
  return dom;
}

RestrictedSampler::RestrictedSampler(std::vector<SampledTerm> terms,
                                     const FESpaceDef& space, bool matrix_kind,
                                     std::vector<EntryTarget> targets)
    : terms_(std::move(terms)),
      space_(&space),
      matrix_kind_(matrix_kind),
      targets_(std::move(targets)) {
  const auto& data = space.assembly_data();
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();

  evals_.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (matrix_kind_ && t.mode != ElemMode::matrix)
      throw ArgumentError("matrix sampler needs matrix-mode terms");
    if (!matrix_kind_ && t.mode == ElemMode::matrix)
      throw ArgumentError("vector sampler needs vector/action terms");
    evals_.emplace_back(t.kernel, space, t.mode);
  }

  // group targets by step
  std::map<int, std::vector<int>> by_step;
  for (size_t i = 0; i < targets_.size(); ++i)
    by_step[targets_[i].step].push_back(static_cast<int>(i));

  std::set<int> cell_union;
  std::array<int, 4> verts{};
  for (const auto& [step, idxs] : by_step) {
    Group g;
    g.step = step;
    std::map<int, std::vector<CellEntry>> per_cell;
    for (int ti : idxs) {
      const auto& tg = targets_[static_cast<size_t>(ti)];
      if (matrix_kind_) {
        const auto [row, col] = slot_row_col(*data.pattern, tg.slot);
        const int va = space.free_dofs()[static_cast<size_t>(row)];
        const int vb = space.free_dofs()[static_cast<size_t>(col)];
        for (int e : data.vertex_cells[static_cast<size_t>(va)]) {
          mesh.cell_vertices(e, verts);
          const auto end = verts.begin() + vpc;
          const auto itb = std::find(verts.begin(), end, vb);
          if (itb == end) continue;
          const int a = static_cast<int>(
              std::find(verts.begin(), end, va) - verts.begin());
          const int b = static_cast<int>(itb - verts.begin());
          per_cell[e].push_back({flat(a, b, vpc), ti});
        }
      } else {
        const int v = space.free_dofs()[static_cast<size_t>(tg.slot)];
        for (int e : data.vertex_cells[static_cast<size_t>(v)]) {
          mesh.cell_vertices(e, verts);
          const auto end = verts.begin() + vpc;
          const int a = static_cast<int>(
              std::find(verts.begin(), end, v) - verts.begin());
          per_cell[e].push_back({a, ti});
        }
      }
    }
    for (auto& [cell, entries] : per_cell) {
      g.cells.push_back(cell);
      g.entries.push_back(std::move(entries));
      cell_union.insert(cell);
    }
    if (step > 0) steps_.push_back(step);
    groups_.push_back(std::move(g));
  }
  all_cells_.assign(cell_union.begin(), cell_union.end());

  elem_.setZero(vpc, matrix_kind_ ? vpc : 1);
  mem::note(sizeof(double) * static_cast<size_t>(elem_.size()));
}

void RestrictedSampler::sample(const Realization& r, int param,
                               const StateProvider& states,
                               Eigen::VectorXd& out) const {
  if (out.size() != ntargets())
    throw ShapeError("sampler output has the wrong length");
  out.setZero();
  const std::span<const double> mu(r.params.col(param).data(),
                                   static_cast<size_t>(r.params.rows()));
  for (const auto& g : groups_) {
    const double t = g.step == 0 ? 0.0 : r.step_time(g.step);
    for (size_t k = 0; k < terms_.size(); ++k) {
      const auto& term = terms_[k];
      StateFn fn;
      if (term.state_id >= 0) {
        if (!states) throw ArgumentError("sampler needs a state provider");
        fn = states(term.state_id, g.step);
      }
      Eigen::MatrixXd& elem = elem_;
      for (size_t i = 0; i < g.cells.size(); ++i) {
        evals_[k].eval(g.cells[i], mu, t, fn, elem);
        for (const auto& e : g.entries[i])
          out(e.target) += term.scale * elem.data()[e.local];
      }
    }
  }
}

}  // namespace rbrom
