#include "rbrom/fe_space.hpp"

#include <algorithm>

#include "rbrom/stats.hpp"

namespace rbrom {

CartesianMesh::CartesianMesh(int dim, std::array<double, 2> lo,
                             std::array<double, 2> hi,
                             std::array<int, 2> cells)
    : dim_(dim), lo_(lo), hi_(hi), cells_(cells) {
  if (dim_ != 1 && dim_ != 2) throw ArgumentError("mesh dimension must be 1 or 2");
  for (int d = 0; d < dim_; ++d) {
    if (cells_[static_cast<size_t>(d)] < 1)
      throw ArgumentError("mesh needs at least one cell per axis");
    if (!(lo_[static_cast<size_t>(d)] < hi_[static_cast<size_t>(d)]))
      throw ArgumentError("mesh domain needs lo < hi");
  }
}

std::array<double, 2> CartesianMesh::vertex(int v) const {
  if (dim_ == 1) return {lo_[0] + v * h(0), 0.0};
  const int nx = cells_[0] + 1;
  const int i = v % nx;
  const int j = v / nx;
  return {lo_[0] + i * h(0), lo_[1] + j * h(1)};
}

bool CartesianMesh::on_boundary(int v) const {
  if (dim_ == 1) return v == 0 || v == cells_[0];
  const int nx = cells_[0] + 1;
  const int i = v % nx;
  const int j = v / nx;
  return i == 0 || i == cells_[0] || j == 0 || j == cells_[1];
}

void CartesianMesh::cell_vertices(int cell, std::array<int, 4>& out) const {
  if (dim_ == 1) {
    out = {cell, cell + 1, -1, -1};
    return;
  }
  const int nx = cells_[0];
  const int i = cell % nx;
  const int j = cell / nx;
  const int v00 = i + j * (nx + 1);
  out = {v00, v00 + 1, v00 + nx + 1, v00 + nx + 2};
}

std::array<double, 2> CartesianMesh::cell_origin(int cell) const {
  if (dim_ == 1) return {lo_[0] + cell * h(0), 0.0};
  const int nx = cells_[0];
  const int i = cell % nx;
  const int j = cell / nx;
  return {lo_[0] + i * h(0), lo_[1] + j * h(1)};
}

CartesianMesh build_mesh(std::span<const double> domain,
                         std::span<const int> cells) {
  if (cells.empty() || cells.size() > 2)
    throw ArgumentError("build_mesh: 1 or 2 axes expected");
  if (domain.size() != 2 * cells.size())
    throw ArgumentError("build_mesh: domain needs (lo, hi) per axis");
  const int dim = static_cast<int>(cells.size());
  std::array<double, 2> lo{domain[0], 0.0}, hi{domain[1], 1.0};
  std::array<int, 2> nc{cells[0], 0};
  if (dim == 2) {
    lo[1] = domain[2];
    hi[1] = domain[3];
    nc[1] = cells[1];
  }
  return CartesianMesh(dim, lo, hi, nc);
}

std::pair<int, int> slot_row_col(const SparsityPattern& p, int slot) {
  if (slot < 0 || slot >= p.nnz())
    throw ArgumentError("slot out of range of the sparsity pattern");
  const auto it =
      std::upper_bound(p.col_ptr.begin(), p.col_ptr.end(), slot) - 1;
  const int col = static_cast<int>(it - p.col_ptr.begin());
  return {p.row_idx[static_cast<size_t>(slot)], col};
}

FESpaceDef::FESpaceDef(CartesianMesh mesh, DirichletTag tag)
    : mesh_(std::move(mesh)), tag_(tag), shared_(std::make_shared<Shared>()) {
  const int nv = mesh_.num_vertices();
  free_index_.assign(static_cast<size_t>(nv), -1);
  dir_index_.assign(static_cast<size_t>(nv), -1);
  for (int v = 0; v < nv; ++v) {
    const bool constrained =
        tag_ == DirichletTag::boundary && mesh_.on_boundary(v);
    if (constrained) {
      dir_index_[static_cast<size_t>(v)] =
          static_cast<int>(dirichlet_dofs_.size());
      dirichlet_dofs_.push_back(v);
    } else {
      free_index_[static_cast<size_t>(v)] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(v);
    }
  }
}

namespace {

// Free-free and free-dirichlet CSC patterns from the cell connectivity,
// plus per-cell slot tables for the scatter loops.
void build_assembly_data(const FESpaceDef& space, SpaceAssemblyData& out) {
  const auto& mesh = space.mesh();
  const int vpc = mesh.verts_per_cell();
  const int ne = mesh.num_cells();
  const int nf = space.n_free();
  const int nd = space.n_dirichlet();

  std::vector<std::vector<int>> cols_ff(static_cast<size_t>(nf));
  std::vector<std::vector<int>> cols_fd(static_cast<size_t>(nd));
  out.vertex_cells.assign(static_cast<size_t>(mesh.num_vertices()), {});

  std::array<int, 4> verts{};
  for (int e = 0; e < ne; ++e) {
    mesh.cell_vertices(e, verts);
    for (int a = 0; a < vpc; ++a) {
      out.vertex_cells[static_cast<size_t>(verts[static_cast<size_t>(a)])]
          .push_back(e);
      const int ra = space.free_index(verts[static_cast<size_t>(a)]);
      if (ra < 0) continue;
      for (int b = 0; b < vpc; ++b) {
        const int vb = verts[static_cast<size_t>(b)];
        const int cb = space.free_index(vb);
        if (cb >= 0)
          cols_ff[static_cast<size_t>(cb)].push_back(ra);
        else
          cols_fd[static_cast<size_t>(space.dirichlet_index(vb))].push_back(ra);
      }
    }
  }

  auto finalize = [](std::vector<std::vector<int>>& cols, int rows,
                     SparsityPattern& p) {
    p.rows = rows;
    p.cols = static_cast<int>(cols.size());
    p.col_ptr.assign(cols.size() + 1, 0);
    for (size_t c = 0; c < cols.size(); ++c) {
      auto& col = cols[c];
      std::sort(col.begin(), col.end());
      col.erase(std::unique(col.begin(), col.end()), col.end());
      p.col_ptr[c + 1] = p.col_ptr[c] + static_cast<int>(col.size());
    }
    p.row_idx.reserve(static_cast<size_t>(p.col_ptr.back()));
    for (auto& col : cols) p.row_idx.insert(p.row_idx.end(), col.begin(), col.end());
  };

  auto pff = std::make_shared<SparsityPattern>();
  auto pfd = std::make_shared<SparsityPattern>();
  finalize(cols_ff, nf, *pff);
  finalize(cols_fd, nf, *pfd);

  auto find_slot = [](const SparsityPattern& p, int row, int col) {
    const int b = p.col_ptr[static_cast<size_t>(col)];
    const int e = p.col_ptr[static_cast<size_t>(col) + 1];
    const auto it = std::lower_bound(p.row_idx.begin() + b, p.row_idx.begin() + e, row);
    return static_cast<int>(it - p.row_idx.begin());
  };

  out.cell_slots.assign(static_cast<size_t>(ne) * vpc * vpc, -1);
  out.cell_slots_fd.assign(static_cast<size_t>(ne) * vpc * vpc, -1);
  for (int e = 0; e < ne; ++e) {
    mesh.cell_vertices(e, verts);
    for (int a = 0; a < vpc; ++a) {
      const int ra = space.free_index(verts[static_cast<size_t>(a)]);
      if (ra < 0) continue;
      for (int b = 0; b < vpc; ++b) {
        const int vb = verts[static_cast<size_t>(b)];
        const int cb = space.free_index(vb);
        const size_t k =
            (static_cast<size_t>(e) * vpc + static_cast<size_t>(a)) * vpc +
            static_cast<size_t>(b);
        if (cb >= 0)
          out.cell_slots[k] = find_slot(*pff, ra, cb);
        else
          out.cell_slots_fd[k] =
              find_slot(*pfd, ra, space.dirichlet_index(vb));
      }
    }
  }

  out.pattern = pff;
  out.pattern_fd = pfd;

  mem::note(sizeof(int) * (pff->col_ptr.size() + pff->row_idx.size() +
                           pfd->col_ptr.size() + pfd->row_idx.size() +
                           out.cell_slots.size() + out.cell_slots_fd.size()));
}

}  // namespace

const SpaceAssemblyData& FESpaceDef::assembly_data() const {
  std::call_once(shared_->once, [this] {
    build_assembly_data(*this, shared_->data);
    shared_->builds.fetch_add(1);
  });
  return shared_->data;
}

std::pair<CartesianMesh, FESpaceDef> build_mesh_and_space(
    std::span<const double> domain, std::span<const int> cells,
    DirichletTag tag) {
  CartesianMesh mesh = build_mesh(domain, cells);
  FESpaceDef space(mesh, tag);
  return {mesh, std::move(space)};
}

}  // namespace rbrom
