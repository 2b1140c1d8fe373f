#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rbrom/fe_space.hpp"
#include "rbrom/param_space.hpp"

namespace rbrom {

/// Scalar coefficient of a weak form, evaluated at (mu, t, x).
using ParamCoeff = std::function<double(
    std::span<const double> mu, double t, const std::array<double, 2>& x)>;

ParamCoeff constant_coeff(double value);

enum class KernelKind { stiffness, mass, load, nonlinear_reaction };

/// One integrand of the weak form with its tensor-product Gauss rule.
struct WeakFormKernel {
  KernelKind kind = KernelKind::stiffness;
  ParamCoeff coefficient;
  int quad_order = 2;  // must be >= 2 * fe order
  bool depends_mu = true;
  bool depends_t = false;

  WeakFormKernel() = default;
  WeakFormKernel(KernelKind k, ParamCoeff c, int order = 2,
                 bool dep_mu = true, bool dep_t = false);
};

/// Cell subsets the residual and jacobian forms integrate over; empty means
/// the full triangulation.
struct Domains {
  std::vector<int> residual_cells;
  std::vector<int> jacobian_cells;
};

/// Full problem description: space, forms, boundary/initial data.
struct ProblemDef {
  std::shared_ptr<const FESpaceDef> space;
  std::optional<WeakFormKernel> stiffness;  // a(mu, t)
  std::optional<WeakFormKernel> mass;       // m (transient problems)
  std::optional<WeakFormKernel> load;       // f
  std::optional<WeakFormKernel> reaction;   // c(mu) u^3
  ParamCoeff dirichlet_g;   // g(mu, t, x)
  ParamCoeff initial_u0;    // u0(mu, x); t argument ignored
  bool zero_initial = true; // set when u0 is identically zero
  bool transient = false;
  Domains domains;

  bool is_linear() const { return !reaction.has_value(); }
  void validate() const;
};

}  // namespace rbrom
