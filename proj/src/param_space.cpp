#include "rbrom/param_space.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "rbrom/errors.hpp"
#include "rng_util.hpp"

namespace rbrom {

namespace {

constexpr std::array<int, 10> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double radical_inverse(std::uint64_t n, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double x = 0.0;
  while (n > 0) {
    x += static_cast<double>(n % static_cast<std::uint64_t>(base)) * f;
    n /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return x;
}

// Unit-cube design, p x n. The affine map through the box happens afterwards
// and is the same for every strategy.
Eigen::MatrixXd unit_design(int p, int n, Sampling strategy,
                            std::uint64_t seed) {
  Eigen::MatrixXd u(p, n);
  switch (strategy) {
    case Sampling::uniform: {
      std::mt19937_64 rng(seed);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < p; ++d) u(d, i) = detail::uniform01(rng);
      break;
    }
    case Sampling::halton: {
      if (p > static_cast<int>(kPrimes.size()))
        throw ArgumentError("halton sampling supports at most 10 dimensions");
      for (int i = 0; i < n; ++i)
        u.col(i) = halton_point(static_cast<std::uint64_t>(i) + 1, p);
      break;
    }
    case Sampling::latin_hypercube: {
      // Seeded permutation per axis; samples sit at stratum midpoints so the
      // design is reproducible without extra draws.
      std::mt19937_64 rng(seed);
      std::vector<int> perm(static_cast<size_t>(n));
      for (int d = 0; d < p; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
          const auto j = detail::bounded(rng, static_cast<std::uint64_t>(i) + 1);
          std::swap(perm[static_cast<size_t>(i)], perm[j]);
        }
        for (int i = 0; i < n; ++i)
          u(d, i) = (perm[static_cast<size_t>(i)] + 0.5) / n;
      }
      break;
    }
    case Sampling::normal: {
      // Mean at the box center, stddev (hi-lo)/6 per axis -> in unit
      // coordinates: mean 1/2, stddev 1/6, clamped into [0,1].
      std::mt19937_64 rng(seed);
      detail::NormalGen gauss(rng);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < p; ++d) {
          const double z = 0.5 + gauss() / 6.0;
          u(d, i) = std::clamp(z, 0.0, 1.0);
        }
      break;
    }
    case Sampling::tensorial_uniform: {
      // Smallest k with k^p >= n points per axis, placed at cell midpoints
      // (2i-1)/(2k); lexicographic enumeration truncated to n.
      int k = 1;
      auto grid_size = [&](int kk) {
        double s = 1.0;
        for (int d = 0; d < p; ++d) s *= kk;
        return s;
      };
      while (grid_size(k) < static_cast<double>(n)) ++k;
      for (int i = 0; i < n; ++i) {
        int rest = i;
        for (int d = p - 1; d >= 0; --d) {
          const int idx = rest % k;
          rest /= k;
          u(d, i) = (2.0 * idx + 1.0) / (2.0 * k);
        }
      }
      break;
    }
    default:
      throw ConfigError("unknown sampling strategy");
  }
  return u;
}

Eigen::MatrixXd boxed_design(const ParamSpace& space, int nparams,
                             Sampling strategy, std::uint64_t seed) {
  if (nparams < 1) throw ArgumentError("nparams must be >= 1");
  const int p = space.dim();
  Eigen::MatrixXd u = unit_design(p, nparams, strategy, seed);
  for (int d = 0; d < p; ++d) {
    const double lo = space.lo(d);
    const double w = space.hi(d) - space.lo(d);
    u.row(d) = (u.row(d).array() * w + lo).matrix();
  }
  return u;
}

Eigen::MatrixXd bounds_echo(const ParamSpace& space) {
  Eigen::MatrixXd b(2, space.dim());
  for (int d = 0; d < space.dim(); ++d) {
    b(0, d) = space.lo(d);
    b(1, d) = space.hi(d);
  }
  return b;
}

}  // namespace

Sampling sampling_from_string(const std::string& name) {
  if (name == "uniform") return Sampling::uniform;
  if (name == "halton") return Sampling::halton;
  if (name == "latin_hypercube") return Sampling::latin_hypercube;
  if (name == "normal") return Sampling::normal;
  if (name == "tensorial_uniform") return Sampling::tensorial_uniform;
  throw ConfigError("unknown sampling strategy: " + name);
}

std::string to_string(Sampling s) {
  switch (s) {
    case Sampling::uniform:
      return "uniform";
    case Sampling::halton:
      return "halton";
    case Sampling::latin_hypercube:
      return "latin_hypercube";
    case Sampling::normal:
      return "normal";
    case Sampling::tensorial_uniform:
      return "tensorial_uniform";
  }
  throw ConfigError("unknown sampling strategy code");
}

ParamSpace::ParamSpace(std::vector<std::pair<double, double>> bounds)
    : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw ArgumentError("parameter space needs p >= 1");
  for (const auto& [lo, hi] : bounds_)
    if (!(lo < hi)) throw ArgumentError("parameter bounds need lo < hi");
}

TransientParamSpace::TransientParamSpace(ParamSpace space,
                                         std::vector<double> time_grid)
    : space_(std::move(space)), time_grid_(std::move(time_grid)) {
  if (time_grid_.size() < 2)
    throw ArgumentError("time grid needs at least one step");
  const double span = time_grid_.back() - time_grid_.front();
  const double dt = span / (static_cast<double>(time_grid_.size()) - 1.0);
  for (size_t i = 1; i < time_grid_.size(); ++i) {
    const double step = time_grid_[i] - time_grid_[i - 1];
    if (!(step > 0.0) || std::abs(step - dt) > 1e-12 * std::abs(dt))
      throw ArgumentError("time grid must be strictly increasing and uniform");
  }
}

double TransientParamSpace::dt() const {
  return (time_grid_.back() - time_grid_.front()) /
         (static_cast<double>(time_grid_.size()) - 1.0);
}

Realization sample_realization(const ParamSpace& space, int nparams,
                               Sampling strategy, std::uint64_t seed) {
  Realization r;
  r.params = boxed_design(space, nparams, strategy, seed);
  r.seed = seed;
  r.strategy = strategy;
  r.bounds = bounds_echo(space);
  return r;
}

Realization sample_realization(const TransientParamSpace& space, int nparams,
                               Sampling strategy, std::uint64_t seed) {
  Realization r = sample_realization(space.space(), nparams, strategy, seed);
  r.times = space.time_grid();
  return r;
}

Realization take_params(const Realization& r, int nparams) {
  if (nparams < 1 || nparams > r.nparams())
    throw ArgumentError("take_params: invalid count");
  Realization out = r;
  out.params = r.params.leftCols(nparams).eval();
  return out;
}

Eigen::VectorXd halton_point(std::uint64_t index, int dims) {
  if (dims < 1) throw ArgumentError("halton_point: dims must be >= 1");
  if (dims > static_cast<int>(kPrimes.size()))
    throw ArgumentError("halton_point: at most 10 dimensions supported");
  if (index < 1) throw ArgumentError("halton_point: index starts at 1");
  Eigen::VectorXd x(dims);
  for (int d = 0; d < dims; ++d)
    x(d) = radical_inverse(index, kPrimes[static_cast<size_t>(d)]);
  return x;
}

}  // namespace rbrom
