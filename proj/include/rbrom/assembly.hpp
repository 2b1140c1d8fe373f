#pragma once

#include <span>
#include <vector>

#include "rbrom/batched_sparse.hpp"
#include "rbrom/elemental.hpp"

namespace rbrom {

/// One pass over the cells, all parameters scattered per cell; the global
/// structure and the elemental caches are allocated exactly once.
/// With a cell subset only entries touched by those cells are defined.
/// Several kernels are summed into the same structure.
BatchedSparseCsc assemble_batched_matrix(
    std::span<const WeakFormKernel> kernels, const BatchPlan& plan,
    const FESpaceDef& space, std::span<const int> cells = {},
    const Eigen::MatrixXd* state = nullptr, BatchedSparseCsc* reuse = nullptr);

/// Vector assembly; each kernel carries its own mode (vector for load and
/// reaction residuals, action for bilinear-form-times-state terms) and a
/// scale, so a full residual is one call.
struct VectorTerm {
  const WeakFormKernel* kernel;
  ElemMode mode = ElemMode::vector;
  double scale = 1.0;
  const Eigen::MatrixXd* state = nullptr;  // vertices x batch, if needed
};

BatchedVector assemble_batched_vector(std::span<const VectorTerm> terms,
                                      const BatchPlan& plan,
                                      const FESpaceDef& space,
                                      std::span<const int> cells = {},
                                      BatchedVector* reuse = nullptr);

/// The reference path: an outer loop over the parameters that re-runs the
/// integration and re-allocates the elemental caches for each one. The
/// global structure is still allocated once, up front.
BatchedSparseCsc assemble_naive_matrix(std::span<const WeakFormKernel> kernels,
                                       const BatchPlan& plan,
                                       const FESpaceDef& space,
                                       std::span<const int> cells = {},
                                       const Eigen::MatrixXd* state = nullptr,
                                       BatchedSparseCsc* reuse = nullptr);

BatchedVector assemble_naive_vector(std::span<const VectorTerm> terms,
                                    const BatchPlan& plan,
                                    const FESpaceDef& space,
                                    std::span<const int> cells = {},
                                    BatchedVector* reuse = nullptr);

/// Free-rows x dirichlet-columns block of a bilinear form (used by the time
/// marching to apply boundary data without per-step re-integration).
BatchedSparseCsc assemble_batched_fd(std::span<const WeakFormKernel> kernels,
                                     const BatchPlan& plan,
                                     const FESpaceDef& space,
                                     const Eigen::MatrixXd* state = nullptr);

// --- reduced-integration-domain sampling ---------------------------------

// A target entry: a pattern slot (matrix kind) or a free-dof index (vector
// kind), tied to a 1-based time step (0 for steady structures).
struct EntryTarget {
  int slot = 0;
  int step = 0;
};

/// Cells (and time steps) whose integration determines every target entry
/// exactly. Matrix targets map slot -> (row, col) through the CSC pattern
/// and keep the cells containing both dofs; vector targets keep the cells
/// containing the dof. Pass pattern = nullptr for the vector kind.
struct ReducedDomain {
  std::vector<int> cells;
  std::vector<int> time_steps;
};

ReducedDomain reduced_integration_domain(std::span<const EntryTarget> targets,
                                         const SparsityPattern* pattern,
                                         const FESpaceDef& space);

/// Sampled term of a restricted evaluation; `state_id` selects which of the
/// caller-provided per-vertex states the term consumes (-1 for none).
struct SampledTerm {
  WeakFormKernel kernel;
  ElemMode mode = ElemMode::matrix;
  double scale = 1.0;
  int state_id = -1;
};

/// Evaluates selected entries of a parametric structure by integrating only
/// the cells of the reduced integration domain. All bookkeeping is prepared
/// at construction; sample() allocates nothing and touches no array whose
/// size grows with the mesh.
class RestrictedSampler {
 public:
  RestrictedSampler(std::vector<SampledTerm> terms, const FESpaceDef& space,
                    bool matrix_kind, std::vector<EntryTarget> targets);

  int ntargets() const { return static_cast<int>(targets_.size()); }
  const std::vector<EntryTarget>& targets() const { return targets_; }
  const std::vector<int>& all_cells() const { return all_cells_; }
  const std::vector<int>& steps() const { return steps_; }

  // Fills out (|targets|) for one parameter. `states` provides one
  // per-vertex accessor per (state_id, step); it is queried as
  // states(state_id, step). Steady samplers pass step 0.
  using StateProvider = std::function<StateFn(int state_id, int step)>;
  void sample(const Realization& r, int param, const StateProvider& states,
              Eigen::VectorXd& out) const;

 private:
  struct CellEntry {
    int local = 0;   // a * vpc + b (matrix) or a (vector)
    int target = 0;  // row of the output
  };
  struct Group {
    int step = 0;
    std::vector<int> cells;
    std::vector<std::vector<CellEntry>> entries;  // parallel to cells
  };

  std::vector<SampledTerm> terms_;
  std::vector<CellEvaluator> evals_;
  const FESpaceDef* space_;
  bool matrix_kind_;
  std::vector<EntryTarget> targets_;
  std::vector<Group> groups_;
  std::vector<int> all_cells_;
  std::vector<int> steps_;
  mutable Eigen::MatrixXd elem_;  // scratch, vpc x vpc (or vpc x 1)
};

}  // namespace rbrom
