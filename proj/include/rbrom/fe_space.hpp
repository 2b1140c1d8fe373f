#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "rbrom/errors.hpp"

namespace rbrom {

/// Cartesian grid of segments (1d) or quadrilaterals (2d). Vertices are
/// ordered lexicographically with the first axis fastest.
class CartesianMesh {
 public:
  CartesianMesh() = default;
  CartesianMesh(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
                std::array<int, 2> cells);

  int dim() const { return dim_; }
  int num_cells() const { return dim_ == 1 ? cells_[0] : cells_[0] * cells_[1]; }
  int num_vertices() const {
    return dim_ == 1 ? cells_[0] + 1 : (cells_[0] + 1) * (cells_[1] + 1);
  }
  int verts_per_cell() const { return dim_ == 1 ? 2 : 4; }
  int cells_on_axis(int d) const { return cells_[static_cast<size_t>(d)]; }
  double lo(int d) const { return lo_[static_cast<size_t>(d)]; }
  double hi(int d) const { return hi_[static_cast<size_t>(d)]; }
  // uniform cell extent per axis
  double h(int d) const {
    return (hi_[static_cast<size_t>(d)] - lo_[static_cast<size_t>(d)]) /
           cells_[static_cast<size_t>(d)];
  }

  std::array<double, 2> vertex(int v) const;
  bool on_boundary(int v) const;
  // global vertex ids of a cell in tensor order (v00, v10[, v01, v11])
  void cell_vertices(int cell, std::array<int, 4>& out) const;
  // coordinates of the cell's low corner
  std::array<double, 2> cell_origin(int cell) const;

 private:
  int dim_ = 0;
  std::array<double, 2> lo_{0, 0}, hi_{1, 1};
  std::array<int, 2> cells_{0, 0};
};

CartesianMesh build_mesh(std::span<const double> domain,
                         std::span<const int> cells);

enum class DirichletTag { none, boundary };

struct SparsityPattern {
  int rows = 0, cols = 0;
  std::vector<int> col_ptr;  // cols + 1
  std::vector<int> row_idx;  // nnz, sorted within each column
  int nnz() const { return static_cast<int>(row_idx.size()); }
};

// (row, col) pair of a nonzero slot: inverse of the CSC enumeration.
std::pair<int, int> slot_row_col(const SparsityPattern& p, int slot);

// Lazily built, shared per space: patterns, the per-cell slot tables used by
// the scatter loops, and the vertex->cells adjacency.
struct SpaceAssemblyData {
  std::shared_ptr<const SparsityPattern> pattern;     // free x free
  std::shared_ptr<const SparsityPattern> pattern_fd;  // free x dirichlet
  std::vector<int> cell_slots;     // ncells * vpc^2, -1 if constrained
  std::vector<int> cell_slots_fd;  // ncells * vpc^2, -1 unless (free, dir)
  std::vector<std::vector<int>> vertex_cells;
};

/// Lowest-order Lagrange space on a Cartesian mesh with optional Dirichlet
/// constraint on the whole boundary. Dofs are the mesh vertices.
class FESpaceDef {
 public:
  FESpaceDef() = default;
  FESpaceDef(CartesianMesh mesh, DirichletTag tag);

  const CartesianMesh& mesh() const { return mesh_; }
  DirichletTag dirichlet_tag() const { return tag_; }
  int order() const { return 1; }

  int n_free() const { return static_cast<int>(free_dofs_.size()); }
  int n_dirichlet() const { return static_cast<int>(dirichlet_dofs_.size()); }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_dofs_; }
  // vertex id -> position in free/dirichlet list, -1 if not a member
  int free_index(int vertex) const {
    return free_index_[static_cast<size_t>(vertex)];
  }
  int dirichlet_index(int vertex) const {
    return dir_index_[static_cast<size_t>(vertex)];
  }

  const SpaceAssemblyData& assembly_data() const;
  int pattern_build_count() const { return shared_->builds.load(); }

 private:
  CartesianMesh mesh_;
  DirichletTag tag_ = DirichletTag::none;
  std::vector<int> free_dofs_, dirichlet_dofs_;
  std::vector<int> free_index_, dir_index_;

  struct Shared {
    std::once_flag once;
    SpaceAssemblyData data;
    std::atomic<int> builds{0};
  };
  std::shared_ptr<Shared> shared_;
};

std::pair<CartesianMesh, FESpaceDef> build_mesh_and_space(
    std::span<const double> domain, std::span<const int> cells,
    DirichletTag tag);

}  // namespace rbrom
