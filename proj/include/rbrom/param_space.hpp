#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rbrom {

enum class Sampling : std::uint32_t {
  uniform = 0,
  halton = 1,
  latin_hypercube = 2,
  normal = 3,
  tensorial_uniform = 4,
};

Sampling sampling_from_string(const std::string& name);
std::string to_string(Sampling s);

/// Box-shaped parameter domain: one (lo, hi) pair per dimension.
class ParamSpace {
 public:
  explicit ParamSpace(std::vector<std::pair<double, double>> bounds);

  int dim() const { return static_cast<int>(bounds_.size()); }
  double lo(int d) const { return bounds_[d].first; }
  double hi(int d) const { return bounds_[d].second; }
  const std::vector<std::pair<double, double>>& bounds() const {
    return bounds_;
  }

 private:
  std::vector<std::pair<double, double>> bounds_;
};

/// Parameter box crossed with a uniform time grid t_0 < t_1 < ... < t_Nt.
class TransientParamSpace {
 public:
  TransientParamSpace(ParamSpace space, std::vector<double> time_grid);

  const ParamSpace& space() const { return space_; }
  const std::vector<double>& time_grid() const { return time_grid_; }
  int nsteps() const { return static_cast<int>(time_grid_.size()) - 1; }
  double dt() const;

 private:
  ParamSpace space_;
  std::vector<double> time_grid_;
};

/// A sampled set of parameter vectors, optionally carrying the time grid of
/// the originating transient space. Immutable after construction.
struct Realization {
  Eigen::MatrixXd params;     // p x nparams, one column per sample
  std::vector<double> times;  // full grid incl. t_0; empty for steady
  std::uint64_t seed = 0;
  Sampling strategy = Sampling::halton;
  Eigen::MatrixXd bounds;  // 2 x p echo of the originating box

  int dim() const { return static_cast<int>(params.rows()); }
  int nparams() const { return static_cast<int>(params.cols()); }
  bool transient() const { return !times.empty(); }
  int nsteps() const {
    return times.empty() ? 0 : static_cast<int>(times.size()) - 1;
  }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  // time of step n (1-based, t_0 is the initial instant)
  double step_time(int n) const { return times.at(static_cast<size_t>(n)); }
};

Realization sample_realization(const ParamSpace& space, int nparams,
                               Sampling strategy = Sampling::halton,
                               std::uint64_t seed = 0);
Realization sample_realization(const TransientParamSpace& space, int nparams,
                               Sampling strategy = Sampling::halton,
                               std::uint64_t seed = 0);

/// First nparams columns of an existing realization (metadata preserved).
Realization take_params(const Realization& r, int nparams);

/// Point of the Halton sequence in the unit cube. Indexing starts at 1;
/// component d is the radical inverse of `index` in the d-th prime base.
Eigen::VectorXd halton_point(std::uint64_t index, int dims);

}  // namespace rbrom
