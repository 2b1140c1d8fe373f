#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rbrom/weak_form.hpp"

namespace rbrom {

/// A batch of P elemental arrays of identical shape, one per evaluation
/// point, stored contiguously (column p holds the array of point p).
struct ParamBlock {
  int rows = 0, cols = 1;  // cols == 1 for elemental vectors
  Eigen::MatrixXd data;    // (rows*cols) x P

  int nbatch() const { return static_cast<int>(data.cols()); }
  Eigen::Map<const Eigen::MatrixXd> array(int p) const {
    return {data.col(p).data(), rows, cols};
  }
  Eigen::Map<Eigen::MatrixXd> array(int p) {
    return {data.col(p).data(), rows, cols};
  }
};

/// One (mu, t) evaluation point of a batch; `step` is the 1-based time-step
/// index for transient batches and 0 for steady ones.
struct EvalPoint {
  int param = 0;
  double t = 0.0;
  int step = 0;
};

/// The flattened (mu [, t]) axis all batched evaluation runs over, ordered
/// time-fastest, then parameter.
struct BatchPlan {
  const Realization* realization = nullptr;
  std::vector<EvalPoint> points;

  int size() const { return static_cast<int>(points.size()); }

  static BatchPlan steady(const Realization& r);
  // all steps 1..Nt, or the given subset (1-based step indices)
  static BatchPlan transient(const Realization& r,
                             std::span<const int> steps = {});
  static BatchPlan single(const Realization& r, int param, double t,
                          int step = 0);
};

/// Reference-element tables for the tensor-product Gauss rule. All cells of
/// a Cartesian mesh share the same geometry, so these are computed once.
struct RefElement {
  int nq = 0, vpc = 0;
  Eigen::MatrixXd shape;     // vpc x nq
  Eigen::VectorXd weights;   // nq, includes |J|
  Eigen::MatrixXd qoffset;   // 2 x nq, physical offsets from the cell origin
  std::vector<Eigen::MatrixXd> stiff_q;  // w|J| grad N_a . grad N_b per q
  std::vector<Eigen::MatrixXd> mass_q;   // w|J| N_a N_b per q

  RefElement(const CartesianMesh& mesh, int quad_order);
};

enum class ElemMode {
  matrix,  // bilinear form: vpc x vpc per point
  vector,  // linear functional: vpc per point
  action,  // bilinear form applied to a state: vpc per point
};

/// Lazy per-cell evaluator of one weak-form kernel over a batch of
/// evaluation points. Tables and scratch are allocated once at construction;
/// fetch() then fills a caller-held ParamBlock in place.
class ElementalBatch {
 public:
  // `state` (vertices x batch) is required by action mode and by the
  // nonlinear reaction kernel; it holds full nodal values per point.
  ElementalBatch(const WeakFormKernel& kernel, const BatchPlan& plan,
                 const FESpaceDef& space, ElemMode mode,
                 const Eigen::MatrixXd* state = nullptr);

  ParamBlock make_cache() const;
  void fetch(int cell, ParamBlock& out) const;
  // accumulate into `out` instead of overwriting, scaled by `weight`
  void fetch_add(int cell, ParamBlock& out, double weight = 1.0) const;

  int nbatch() const { return plan_.size(); }
  ElemMode mode() const { return mode_; }

 private:
  void accumulate(int cell, ParamBlock& out, double weight, bool add) const;

  WeakFormKernel kernel_;
  BatchPlan plan_;
  const FESpaceDef* space_;
  ElemMode mode_;
  const Eigen::MatrixXd* state_;
  RefElement ref_;
  mutable Eigen::VectorXd local_state_;  // vpc gather scratch
};

/// Single-point elemental evaluation of one kernel with a caller-supplied
/// per-vertex state accessor; the N-independent building block of the
/// reduced-integration-domain sampling.
using StateFn = std::function<double(int vertex)>;

class CellEvaluator {
 public:
  CellEvaluator(const WeakFormKernel& kernel, const FESpaceDef& space,
                ElemMode mode);

  // matrix mode fills `elem` (vpc x vpc); vector/action modes fill column 0.
  void eval(int cell, std::span<const double> mu, double t,
            const StateFn& state, Eigen::MatrixXd& elem) const;
  int vpc() const { return ref_.vpc; }

 private:
  WeakFormKernel kernel_;
  const FESpaceDef* space_;
  ElemMode mode_;
  RefElement ref_;
  mutable Eigen::VectorXd local_state_;
};

}  // namespace rbrom
