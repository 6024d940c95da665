#include <doctest.h>

#include "latcap/errors.hpp"
#include "latcap/riesz.hpp"
#include "oracles.hpp"

using namespace latcap;

TEST_SUITE("riesz") {
  TEST_CASE("closed forms") {
    const auto one = capacity_alpha(FiniteSet(5, {LatticePoint(5)}), 2.0);
    CHECK(one.capacity_lower == 1.0);
    CHECK(one.capacity_upper == 1.0);
    CHECK(equilibrium_function_check(one) == 0.0);
    for (int r : {1, 3, 7}) {
      const auto two = capacity_alpha(FiniteSet(5, {LatticePoint(5), LatticePoint::unit(5, 2).scaled(r)}), 2.0);
      const double want = 2.0 / (1.0 + std::pow(1.0 + r, -2.0));
      CHECK(two.capacity_lower <= want * (1 + 1e-15));
      CHECK(two.capacity_upper >= want * (1 - 1e-15));
      CHECK(equilibrium_function_check(two) < 1e-14);
    }
  }

  TEST_CASE("segment(2) matches the grid oracle") {
    const FiniteSet seg = make_shape({ShapeKind::segment, 2}, 5);
    const auto r = capacity_alpha(seg, 2.0);
    const double grid = 1.0 / oracle::grid_min_energy(green_matrix(seg, Kernel::riesz(5, 2.0)), 1000);
    CHECK(std::abs(r.capacity() - grid) <= 2e-3);
  }

  TEST_CASE("bracket contains the refined grid value on small sets") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const int n = 2 + static_cast<int>(seed % 3);
      const FiniteSet a = make_shape({ShapeKind::random, 3, static_cast<std::size_t>(n), seed}, 5);
      for (double alpha : {1.0, 2.0, 4.0}) {
        const auto r = capacity_alpha(a, alpha, 1e-9);
        const double grid = 1.0 / oracle::refined_grid_min_energy(green_matrix(a, Kernel::riesz(5, alpha)));
        CHECK(r.capacity_lower <= r.capacity_upper);
        CHECK(r.capacity_upper - r.capacity_lower <= 1e-9 * r.capacity_lower);
        CHECK(grid >= r.capacity_lower * (1 - 1e-13));
        CHECK(grid <= r.capacity_upper * (1 + 1e-13));
      }
    }
  }

  TEST_CASE("equilibrium function deviation is small for a 5-point segment") {
    const auto r = capacity_alpha(make_shape({ShapeKind::segment, 4}, 5), 2.0, 1e-8);
    CHECK(equilibrium_function_check(r) <= 1e-3);
  }

  TEST_CASE("translation, reflection and monotonicity") {
    const FiniteSet a = make_shape({ShapeKind::random, 4, 6, 4}, 5);
    const double c = capacity_alpha(a, 2.0).capacity();
    CHECK(capacity_alpha(translate(a, LatticePoint{3, 3, -8, 0, 1}), 2.0).capacity() == doctest::Approx(c).epsilon(1e-8));
    CHECK(capacity_alpha(negate(a), 2.0).capacity() == doctest::Approx(c).epsilon(1e-8));
    std::vector<LatticePoint> more = a.points();
    more.push_back(LatticePoint{9, 9, 9, 9, 9});
    CHECK(capacity_alpha(FiniteSet(5, more), 2.0).capacity() > c);
  }

  TEST_CASE("union bounds sandwich the certified union capacity") {
    const FiniteSet ball = make_shape({ShapeKind::ball, 1}, 5);
    for (int r : {4, 8, 16, 32}) {
      const LatticePoint z = LatticePoint::unit(5, 0).scaled(r);
      const UnionBounds ub = union_bounds(ball, ball, z, 2.0);
      const auto cu = capacity_alpha(set_union(ball, translate(ball, z)), 2.0);
      CHECK(ub.lower <= cu.capacity_upper);
      if (ub.upper) CHECK(*ub.upper >= cu.capacity_lower);
    }
    CHECK_THROWS_AS(union_bounds(ball, ball, LatticePoint::unit(5, 0), 2.0), PreconditionError);
  }

  TEST_CASE("psi feasibility for singletons above a threshold") {
    const FiniteSet o(5, {LatticePoint(5)});
    bool seen = false;
    for (int r = 1; r <= 40; ++r) {
      const UnionBounds ub = union_bounds(o, o, LatticePoint::unit(5, 0).scaled(r), 2.0, 0.1);
      if (seen) CHECK(ub.upper.has_value());
      seen = seen || ub.upper.has_value();
      CHECK((ub.upper.has_value() == (ub.min_feasible_slack <= 0.1 + 1e-9)));
    }
    CHECK(seen);
  }

  TEST_CASE("singleton sweep ratio is 2 / (1 + g_alpha(z))") {
    const FiniteSet o(5, {LatticePoint(5)});
    const auto rec = derivative_sweep_riesz(o, o, LatticePoint::unit(5, 0), {8, 16, 32, 64}, 2.0);
    for (const auto& r : rec) {
      const double want = 2.0 / (1.0 + riesz_kernel(r.z, 2.0));
      CHECK(std::abs(r.ratio - want) <= r.ratio_err + 1e-12);
      CHECK(r.target == doctest::Approx(2.0));
    }
  }

  TEST_CASE("ball sweep approaches the target monotonically") {
    const FiniteSet ball = make_shape({ShapeKind::ball, 1}, 5);
    const auto rec = derivative_sweep_riesz(ball, ball, LatticePoint::unit(5, 0), {8, 16, 32, 64}, 2.0);
    for (std::size_t i = 1; i < rec.size(); ++i)
      CHECK(std::abs(rec[i].ratio - rec[i].target) < std::abs(rec[i - 1].ratio - rec[i - 1].target));
    for (const auto& r : rec) CHECK_FALSE(r.flagged("sandwich_violated"));
  }

  TEST_CASE("domain checks") {
    CHECK_THROWS_AS(capacity_alpha(FiniteSet(3, {LatticePoint(3)}), 3.5), DomainError);
    CHECK_THROWS_AS(capacity_alpha(FiniteSet(3, {LatticePoint(3)}), 1.0, 0.0), ConfigError);
  }
}
