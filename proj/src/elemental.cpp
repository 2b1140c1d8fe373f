#include "rbrom/elemental.hpp"

#include <cmath>

#include "rbrom/stats.hpp"

namespace rbrom {

namespace {

struct GaussRule {
  std::vector<double> x, w;
};

// Gauss-Legendre on [-1, 1]; n points integrate degree 2n-1 exactly.
GaussRule gauss_rule(int npts) {
  switch (npts) {
    case 1:
      return {{0.0}, {2.0}};
    case 2:
      return {{-0.5773502691896257, 0.5773502691896257}, {1.0, 1.0}};
    case 3:
      return {{-0.7745966692414834, 0.0, 0.7745966692414834},
              {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    case 4:
      return {{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
               0.8611363115940526},
              {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
               0.3478548451374538}};
    default:
      return {{-0.9061798459386640, -0.5384693101056831, 0.0,
               0.5384693101056831, 0.9061798459386640},
              {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
               0.4786286704993665, 0.2369268850561891}};
  }
}

int points_for_order(int order) {
  const int n = (order + 2) / 2;  // ceil((order + 1) / 2)
  return std::min(std::max(n, 1), 5);
}

double eval_coeff(const WeakFormKernel& kernel, std::span<const double> mu,
                  double t, const std::array<double, 2>& x, int cell,
                  int param) {
  try {
    return kernel.coefficient(mu, t, x);
  } catch (const std::exception& e) {
    throw EvalError("kernel evaluation failed at cell " + std::to_string(cell) +
                    ", parameter index " + std::to_string(param) + ": " +
                    e.what());
  }
}

void check_mode(const WeakFormKernel& kernel, ElemMode mode) {
  if (kernel.kind == KernelKind::load && mode != ElemMode::vector)
    throw ArgumentError("load kernels only evaluate in vector mode");
  if (kernel.kind == KernelKind::nonlinear_reaction && mode == ElemMode::action)
    throw ArgumentError("reaction kernels evaluate as vector or matrix");
}

bool needs_state(const WeakFormKernel& kernel, ElemMode mode) {
  return mode == ElemMode::action ||
         kernel.kind == KernelKind::nonlinear_reaction;
}

// One kernel contribution at one quadrature point into the elemental block.
// `elem` is vpc x vpc in matrix mode, vpc x 1 otherwise.
template <typename ElemT>
inline void add_qpoint(const WeakFormKernel& kernel, ElemMode mode,
                       const RefElement& ref, int q, double c,
                       const Eigen::VectorXd& u_loc, ElemT&& elem) {
  switch (kernel.kind) {
    case KernelKind::stiffness: {
      const auto& kq = ref.stiff_q[static_cast<size_t>(q)];
      if (mode == ElemMode::matrix)
        elem.noalias() += c * kq;
      else
        elem.col(0).noalias() += c * (kq * u_loc);
      break;
    }
    case KernelKind::mass: {
      const auto& mq = ref.mass_q[static_cast<size_t>(q)];
      if (mode == ElemMode::matrix)
        elem.noalias() += c * mq;
      else
        elem.col(0).noalias() += c * (mq * u_loc);
      break;
    }
    case KernelKind::load:
      elem.col(0).noalias() += c * (ref.weights(q) * ref.shape.col(q));
      break;
    case KernelKind::nonlinear_reaction: {
      const double uq = ref.shape.col(q).dot(u_loc);
      if (mode == ElemMode::matrix)
        elem.noalias() += (3.0 * c * uq * uq) * ref.mass_q[static_cast<size_t>(q)];
      else
        elem.col(0).noalias() +=
            (c * uq * uq * uq * ref.weights(q)) * ref.shape.col(q);
      break;
    }
  }
}

}  // namespace

BatchPlan BatchPlan::steady(const Realization& r) {
  BatchPlan plan;
  plan.realization = &r;
  plan.points.reserve(static_cast<size_t>(r.nparams()));
  for (int p = 0; p < r.nparams(); ++p) plan.points.push_back({p, 0.0, 0});
  return plan;
}

BatchPlan BatchPlan::transient(const Realization& r,
                               std::span<const int> steps) {
  if (!r.transient())
    throw ArgumentError("transient batch plan needs a transient realization");
  BatchPlan plan;
  plan.realization = &r;
  std::vector<int> all;
  if (steps.empty()) {
    all.resize(static_cast<size_t>(r.nsteps()));
    for (int n = 1; n <= r.nsteps(); ++n) all[static_cast<size_t>(n - 1)] = n;
    steps = all;
  }
  plan.points.reserve(static_cast<size_t>(r.nparams()) * steps.size());
  for (int p = 0; p < r.nparams(); ++p)
    for (int n : steps) plan.points.push_back({p, r.step_time(n), n});
  return plan;
}

BatchPlan BatchPlan::single(const Realization& r, int param, double t,
                            int step) {
  BatchPlan plan;
  plan.realization = &r;
  plan.points.push_back({param, t, step});
  return plan;
}

RefElement::RefElement(const CartesianMesh& mesh, int quad_order) {
  const int dim = mesh.dim();
  vpc = mesh.verts_per_cell();
  const GaussRule rule = gauss_rule(points_for_order(quad_order));
  const int n1 = static_cast<int>(rule.x.size());
  nq = dim == 1 ? n1 : n1 * n1;

  shape.resize(vpc, nq);
  weights.resize(nq);
  qoffset.resize(2, nq);
  std::vector<Eigen::MatrixXd> grads(static_cast<size_t>(nq),
                                     Eigen::MatrixXd(vpc, dim));

  const double hx = mesh.h(0);
  const double hy = dim == 2 ? mesh.h(1) : 1.0;
  const double jac_det = dim == 1 ? hx / 2.0 : hx * hy / 4.0;

  for (int q = 0; q < nq; ++q) {
    const int qx = dim == 1 ? q : q % n1;
    const int qy = dim == 1 ? 0 : q / n1;
    const double xi = rule.x[static_cast<size_t>(qx)];
    const double eta = dim == 2 ? rule.x[static_cast<size_t>(qy)] : 0.0;
    const double wq = dim == 1 ? rule.w[static_cast<size_t>(qx)]
                               : rule.w[static_cast<size_t>(qx)] *
                                     rule.w[static_cast<size_t>(qy)];
    weights(q) = wq * jac_det;
    qoffset(0, q) = (xi + 1.0) / 2.0 * hx;
    qoffset(1, q) = dim == 2 ? (eta + 1.0) / 2.0 * hy : 0.0;

    auto& g = grads[static_cast<size_t>(q)];
    if (dim == 1) {
      shape(0, q) = (1.0 - xi) / 2.0;
      shape(1, q) = (1.0 + xi) / 2.0;
      g(0, 0) = -1.0 / hx;
      g(1, 0) = 1.0 / hx;
    } else {
      // tensor vertex order (v00, v10, v01, v11)
      shape(0, q) = (1.0 - xi) * (1.0 - eta) / 4.0;
      shape(1, q) = (1.0 + xi) * (1.0 - eta) / 4.0;
      shape(2, q) = (1.0 - xi) * (1.0 + eta) / 4.0;
      shape(3, q) = (1.0 + xi) * (1.0 + eta) / 4.0;
      g(0, 0) = -(1.0 - eta) / 4.0 * 2.0 / hx;
      g(1, 0) = (1.0 - eta) / 4.0 * 2.0 / hx;
      g(2, 0) = -(1.0 + eta) / 4.0 * 2.0 / hx;
      g(3, 0) = (1.0 + eta) / 4.0 * 2.0 / hx;
      g(0, 1) = -(1.0 - xi) / 4.0 * 2.0 / hy;
      g(1, 1) = -(1.0 + xi) / 4.0 * 2.0 / hy;
      g(2, 1) = (1.0 - xi) / 4.0 * 2.0 / hy;
      g(3, 1) = (1.0 + xi) / 4.0 * 2.0 / hy;
    }
  }

  stiff_q.assign(static_cast<size_t>(nq), Eigen::MatrixXd(vpc, vpc));
  mass_q.assign(static_cast<size_t>(nq), Eigen::MatrixXd(vpc, vpc));
  for (int q = 0; q < nq; ++q) {
    stiff_q[static_cast<size_t>(q)] = weights(q) *
                                      grads[static_cast<size_t>(q)] *
                                      grads[static_cast<size_t>(q)].transpose();
    mass_q[static_cast<size_t>(q)] =
        weights(q) * shape.col(q) * shape.col(q).transpose();
  }

  mem::note(sizeof(double) *
            (static_cast<size_t>(nq) * vpc * (2 * vpc + 2) + 3 * nq));
}

ElementalBatch::ElementalBatch(const WeakFormKernel& kernel,
                               const BatchPlan& plan, const FESpaceDef& space,
                               ElemMode mode, const Eigen::MatrixXd* state)
    : kernel_(kernel),
      plan_(plan),
      space_(&space),
      mode_(mode),
      state_(state),
      ref_(space.mesh(), kernel.quad_order) {
  check_mode(kernel_, mode_);
  if (needs_state(kernel_, mode_)) {
    if (state_ == nullptr)
      throw ArgumentError("this evaluation mode needs a state");
    if (state_->rows() != space.mesh().num_vertices() ||
        state_->cols() != plan_.size())
      throw ShapeError("state must be (vertices x batch)");
    local_state_.resize(ref_.vpc);
  }
}

ParamBlock ElementalBatch::make_cache() const {
  ParamBlock block;
  block.rows = ref_.vpc;
  block.cols = mode_ == ElemMode::matrix ? ref_.vpc : 1;
  block.data.setZero(static_cast<Eigen::Index>(block.rows) * block.cols,
                     plan_.size());
  mem::note(sizeof(double) * static_cast<size_t>(block.data.size()));
  return block;
}

void ElementalBatch::fetch(int cell, ParamBlock& out) const {
  accumulate(cell, out, 1.0, false);
}

void ElementalBatch::fetch_add(int cell, ParamBlock& out, double weight) const {
  accumulate(cell, out, weight, true);
}

void ElementalBatch::accumulate(int cell, ParamBlock& out, double weight,
                                bool add) const {
  const int expected_cols = mode_ == ElemMode::matrix ? ref_.vpc : 1;
  if (out.rows != ref_.vpc || out.cols != expected_cols ||
      out.data.cols() != plan_.size())
    throw ShapeError("elemental cache has the wrong shape");
  if (!add) out.data.setZero();

  const auto& mesh = space_->mesh();
  const auto origin = mesh.cell_origin(cell);
  std::array<int, 4> verts{};
  mesh.cell_vertices(cell, verts);

  const bool uses_state = needs_state(kernel_, mode_);
  const bool coeff_const = !kernel_.depends_mu && !kernel_.depends_t;
  const auto& params = plan_.realization->params;

  for (int q = 0; q < ref_.nq; ++q) {
    const std::array<double, 2> xq = {origin[0] + ref_.qoffset(0, q),
                                      origin[1] + ref_.qoffset(1, q)};
    double c_cached = 0.0;
    bool have_cached = false;
    for (int b = 0; b < plan_.size(); ++b) {
      const auto& pt = plan_.points[static_cast<size_t>(b)];
      double c;
      if (coeff_const && have_cached) {
        c = c_cached;
      } else {
        c = eval_coeff(kernel_,
                       std::span<const double>(
                           params.col(pt.param).data(),
                           static_cast<size_t>(params.rows())),
                       pt.t, xq, cell, pt.param);
        c_cached = c;
        have_cached = true;
      }
      if (uses_state)
        for (int a = 0; a < ref_.vpc; ++a)
          local_state_(a) = (*state_)(verts[static_cast<size_t>(a)], b);

      Eigen::Map<Eigen::MatrixXd> elem(out.data.col(b).data(), out.rows,
                                       out.cols);
      add_qpoint(kernel_, mode_, ref_, q, c * weight, local_state_, elem);
    }
  }
}

CellEvaluator::CellEvaluator(const WeakFormKernel& kernel,
                             const FESpaceDef& space, ElemMode mode)
    : kernel_(kernel),
      space_(&space),
      mode_(mode),
      ref_(space.mesh(), kernel.quad_order) {
  check_mode(kernel_, mode_);
  local_state_.setZero(ref_.vpc);
}

void CellEvaluator::eval(int cell, std::span<const double> mu, double t,
                         const StateFn& state, Eigen::MatrixXd& elem) const {
  const int cols = mode_ == ElemMode::matrix ? ref_.vpc : 1;
  if (elem.rows() != ref_.vpc || elem.cols() != cols)
    throw ShapeError("elemental block has the wrong shape");
  elem.setZero();

  const auto& mesh = space_->mesh();
  const auto origin = mesh.cell_origin(cell);
  std::array<int, 4> verts{};
  mesh.cell_vertices(cell, verts);

  if (needs_state(kernel_, mode_)) {
    if (!state) throw ArgumentError("this evaluation mode needs a state");
    for (int a = 0; a < ref_.vpc; ++a)
      local_state_(a) = state(verts[static_cast<size_t>(a)]);
  }

  for (int q = 0; q < ref_.nq; ++q) {
    const std::array<double, 2> xq = {origin[0] + ref_.qoffset(0, q),
                                      origin[1] + ref_.qoffset(1, q)};
    const double c = eval_coeff(kernel_, mu, t, xq, cell, 0);
    add_qpoint(kernel_, mode_, ref_, q, c, local_state_, elem);
  }
}

}  // namespace rbrom
