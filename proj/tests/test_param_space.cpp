#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <set>

#include "doctest.h"
#include "rbrom/errors.hpp"
#include "rbrom/param_space.hpp"

using namespace rbrom;

namespace {

// independent radical-inverse oracle: collect the digits of n in the given
// base, then evaluate the mirrored expansion by Horner from the most
// significant digit
double radical_inverse_oracle(std::uint64_t n, int base) {
  std::vector<int> digits;
  while (n > 0) {
    digits.push_back(static_cast<int>(n % static_cast<std::uint64_t>(base)));
    n /= static_cast<std::uint64_t>(base);
  }
  double x = 0.0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it)
    x = (x + *it) / base;
  return x;
}

}  // namespace

TEST_CASE("halton points match the radical-inverse oracle") {
  // frozen from the oracle: indices 1..3 in bases (2, 3)
  CHECK(radical_inverse_oracle(1, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(radical_inverse_oracle(1, 3) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(radical_inverse_oracle(2, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(radical_inverse_oracle(3, 3) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-15));

  const Eigen::VectorXd p1 = halton_point(1, 2);
  CHECK(p1(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p1(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(halton_point(2, 1)(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(halton_point(1, 1)(0) == doctest::Approx(0.5).epsilon(1e-15));

  for (std::uint64_t i = 1; i <= 40; ++i) {
    const Eigen::VectorXd p = halton_point(i, 3);
    CHECK(p(0) == doctest::Approx(radical_inverse_oracle(i, 2)).epsilon(1e-15));
    CHECK(p(1) == doctest::Approx(radical_inverse_oracle(i, 3)).epsilon(1e-15));
    CHECK(p(2) == doctest::Approx(radical_inverse_oracle(i, 5)).epsilon(1e-15));
  }
}

TEST_CASE("halton errors and coverage properties") {
  CHECK_THROWS_AS(halton_point(1, 11), ArgumentError);
  CHECK_THROWS_AS(halton_point(0, 2), ArgumentError);

  // indices 1..n pairwise distinct and strictly inside (0,1)^p
  std::set<std::pair<double, double>> seen;
  for (std::uint64_t i = 1; i <= 100; ++i) {
    const Eigen::VectorXd p = halton_point(i, 2);
    CHECK(p(0) > 0.0);
    CHECK(p(0) < 1.0);
    CHECK(p(1) > 0.0);
    CHECK(p(1) < 1.0);
    CHECK(seen.insert({p(0), p(1)}).second);
  }
}

TEST_CASE("halton realization on the unit box matches the sequence") {
  const ParamSpace box({{0.0, 1.0}, {0.0, 1.0}});
  const Realization r = sample_realization(box, 3, Sampling::halton, 0);
  REQUIRE(r.nparams() == 3);
  CHECK(r.params(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.params(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.params(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.params(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.params(0, 2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.params(1, 2) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("uniform sampling: containment and determinism") {
  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  const Realization a = sample_realization(box, 2, Sampling::uniform, 7);
  const Realization b = sample_realization(box, 2, Sampling::uniform, 7);
  REQUIRE(a.nparams() == 2);
  for (int p = 0; p < 2; ++p)
    for (int d = 0; d < 2; ++d) {
      CHECK(a.params(d, p) >= 1.0);
      CHECK(a.params(d, p) <= 5.0);
    }
  CHECK(a.params == b.params);  // bitwise identical
  const Realization c = sample_realization(box, 2, Sampling::uniform, 8);
  CHECK(a.params != c.params);
}

TEST_CASE("tensorial_uniform builds the midpoint grid") {
  const ParamSpace box({{0.0, 1.0}, {0.0, 1.0}});
  // grid rule oracle: k = ceil(4^(1/2)) = 2 points per axis at (2i-1)/(2k),
  // lexicographic enumeration (first axis outermost)
  const Realization r =
      sample_realization(box, 4, Sampling::tensorial_uniform, 0);
  const double q1 = 0.25, q3 = 0.75;
  CHECK(r.params(0, 0) == doctest::Approx(q1));
  CHECK(r.params(1, 0) == doctest::Approx(q1));
  CHECK(r.params(0, 1) == doctest::Approx(q1));
  CHECK(r.params(1, 1) == doctest::Approx(q3));
  CHECK(r.params(0, 2) == doctest::Approx(q3));
  CHECK(r.params(1, 2) == doctest::Approx(q1));
  CHECK(r.params(0, 3) == doctest::Approx(q3));
  CHECK(r.params(1, 3) == doctest::Approx(q3));

  // truncation: n = 3 keeps the first three of the same enumeration
  const Realization t =
      sample_realization(box, 3, Sampling::tensorial_uniform, 0);
  CHECK(t.params == r.params.leftCols(3));
}

TEST_CASE("latin hypercube hits every stratum once per axis") {
  const ParamSpace box({{0.0, 1.0}, {-2.0, 2.0}, {5.0, 6.0}});
  const int n = 16;
  const Realization r =
      sample_realization(box, n, Sampling::latin_hypercube, 3);
  for (int d = 0; d < 3; ++d) {
    std::set<int> strata;
    for (int i = 0; i < n; ++i) {
      const double u = (r.params(d, i) - box.lo(d)) / (box.hi(d) - box.lo(d));
      strata.insert(static_cast<int>(u * n));
    }
    CHECK(strata.size() == static_cast<size_t>(n));
  }
  const Realization r2 =
      sample_realization(box, n, Sampling::latin_hypercube, 3);
  CHECK(r.params == r2.params);
}

TEST_CASE("normal sampling clamps into the box") {
  const ParamSpace box({{1.0, 5.0}});
  const Realization r = sample_realization(box, 500, Sampling::normal, 11);
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < r.nparams(); ++i) {
    lo = std::min(lo, r.params(0, i));
    hi = std::max(hi, r.params(0, i));
    CHECK(r.params(0, i) >= 1.0);
    CHECK(r.params(0, i) <= 5.0);
  }
  // mass concentrates around the center 3 with stddev (5-1)/6
  CHECK(lo < 2.5);
  CHECK(hi > 3.5);
}

TEST_CASE("affine mapping is monotone per axis for every strategy") {
  const ParamSpace unit({{0.0, 1.0}, {0.0, 1.0}});
  const ParamSpace box({{-1.0, 3.0}, {10.0, 30.0}});
  for (Sampling s : {Sampling::uniform, Sampling::halton,
                     Sampling::latin_hypercube, Sampling::normal,
                     Sampling::tensorial_uniform}) {
    const Realization u = sample_realization(unit, 9, s, 5);
    const Realization m = sample_realization(box, 9, s, 5);
    for (int i = 0; i < 9; ++i) {
      // normal clamps in box coordinates, so compare only interior samples
      if (s == Sampling::normal &&
          (u.params(0, i) <= 0.0 || u.params(0, i) >= 1.0 ||
           u.params(1, i) <= 0.0 || u.params(1, i) >= 1.0))
        continue;
      CHECK(m.params(0, i) ==
            doctest::Approx(-1.0 + u.params(0, i) * 4.0).epsilon(1e-13));
      CHECK(m.params(1, i) ==
            doctest::Approx(10.0 + u.params(1, i) * 20.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("argument validation") {
  const ParamSpace box({{0.0, 1.0}});
  CHECK_THROWS_AS(sample_realization(box, 0, Sampling::uniform, 0),
                  ArgumentError);
  CHECK_THROWS_AS(ParamSpace({}), ArgumentError);
  CHECK_THROWS_AS(ParamSpace({{2.0, 1.0}}), ArgumentError);
  CHECK_THROWS_AS(sampling_from_string("sobol"), ConfigError);
}

TEST_CASE("transient spaces attach the full time grid") {
  const ParamSpace box({{1.0, 5.0}, {1.0, 5.0}});
  std::vector<double> grid;
  for (int n = 0; n <= 10; ++n) grid.push_back(0.01 * n);
  const TransientParamSpace tspace(box, grid);
  CHECK(tspace.nsteps() == 10);
  CHECK(tspace.dt() == doctest::Approx(0.01).epsilon(1e-14));

  const Realization r = sample_realization(tspace, 4, Sampling::halton, 0);
  CHECK(r.transient());
  CHECK(r.nsteps() == 10);
  CHECK(r.times == grid);
  CHECK(r.step_time(1) == doctest::Approx(0.01));

  CHECK_THROWS_AS(TransientParamSpace(box, {0.0, 0.1, 0.15}), ArgumentError);
  CHECK_THROWS_AS(TransientParamSpace(box, {0.0}), ArgumentError);
}
