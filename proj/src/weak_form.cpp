#include "rbrom/weak_form.hpp"

namespace rbrom {

ParamCoeff constant_coeff(double value) {
  return [value](std::span<const double>, double,
                 const std::array<double, 2>&) { return value; };
}

WeakFormKernel::WeakFormKernel(KernelKind k, ParamCoeff c, int order,
                               bool dep_mu, bool dep_t)
    : kind(k),
      coefficient(std::move(c)),
      quad_order(order),
      depends_mu(dep_mu),
      depends_t(dep_t) {
  if (quad_order < 2)
    throw ArgumentError("quadrature order must be >= 2 * fe order");
  if (!coefficient) throw ArgumentError("kernel needs a coefficient");
}

void ProblemDef::validate() const {
  if (!space) throw ArgumentError("problem needs a FE space");
  if (!stiffness) throw ArgumentError("problem needs a stiffness form");
  if (transient && !mass)
    throw ArgumentError("transient problems carry both a and m");
  if (!dirichlet_g) throw ArgumentError("problem needs Dirichlet data");
}

}  // namespace rbrom
