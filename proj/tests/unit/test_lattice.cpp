#include <doctest.h>

#include <cmath>

#include "latcap/errors.hpp"
#include "latcap/lattice.hpp"

using namespace latcap;

TEST_SUITE("lattice") {
  TEST_CASE("make_shape examples") {
    CHECK(make_shape({ShapeKind::ball, 0}, 3) == FiniteSet(3, {LatticePoint{0, 0, 0}}));
    CHECK(make_shape({ShapeKind::segment, 2}, 3) ==
          FiniteSet(3, {LatticePoint{0, 0, 0}, LatticePoint{1, 0, 0}, LatticePoint{2, 0, 0}}));
    CHECK(make_shape({ShapeKind::ball, 1}, 3).size() == 7);
    CHECK(make_shape({ShapeKind::box, 1}, 2).size() == 4);
    CHECK(make_shape({ShapeKind::ball, 1}, 5).size() == 11);
  }

  TEST_CASE("lattice ball counts match a direct enumeration") {
    for (int r : {2, 3}) {
      std::size_t count = 0;
      for (int x = -r; x <= r; ++x)
        for (int y = -r; y <= r; ++y)
          for (int z = -r; z <= r; ++z) count += x * x + y * y + z * z <= r * r;
      CHECK(make_shape({ShapeKind::ball, r}, 3).size() == count);
    }
  }

  TEST_CASE("random shapes are deterministic and sized") {
    const ShapeSpec spec{ShapeKind::random, 4, 9, 77};
    const FiniteSet a = make_shape(spec, 3), b = make_shape(spec, 3);
    CHECK(a == b);
    CHECK(a.size() == 9);
    for (const auto& p : a)
      for (int i = 0; i < 3; ++i) CHECK((p[i] >= 0 && p[i] <= 4));
    CHECK_FALSE(make_shape({ShapeKind::random, 4, 9, 78}, 3) == a);
  }

  TEST_CASE("invalid shapes") {
    CHECK_THROWS_AS(make_shape({ShapeKind::ball, -1}, 3), ConfigError);
    CHECK_THROWS_AS(make_shape({ShapeKind::random, 1, 9, 1}, 2), ConfigError);
    CHECK_THROWS_AS(make_shape({ShapeKind::random, 3, 2, std::nullopt}, 2), ConfigError);
    CHECK_THROWS_AS(make_shape({ShapeKind::ball, 1}, 0), ConfigError);
    CHECK_THROWS_AS(FiniteSet(2, {}), ConfigError);
    CHECK_THROWS_AS(FiniteSet(2, {LatticePoint{1, 1}, LatticePoint{1, 1}}), ConfigError);
    CHECK_THROWS_AS(FiniteSet(2, {LatticePoint{1, 1, 0}}), ConfigError);
  }

  TEST_CASE("translate") {
    const FiniteSet origin(3, {LatticePoint{0, 0, 0}});
    const LatticePoint z{4, -1, 2};
    CHECK(translate(origin, z) == FiniteSet(3, {z}));
    const FiniteSet seg = make_shape({ShapeKind::segment, 2}, 3);
    CHECK(translate(seg, LatticePoint{5, 0, 0}) ==
          FiniteSet(3, {LatticePoint{5, 0, 0}, LatticePoint{6, 0, 0}, LatticePoint{7, 0, 0}}));
    CHECK_THROWS_AS(translate(seg, LatticePoint{1, 0}), ConfigError);
  }

  TEST_CASE("translate is a bijection and preserves distances") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const FiniteSet s = make_shape({ShapeKind::random, 5, 6, seed}, 3);
      const FiniteSet t = make_shape({ShapeKind::random, 5, 4, seed + 100}, 3);
      const LatticePoint z{static_cast<int>(seed) - 10, 3, -static_cast<int>(seed % 7)};
      CHECK(translate(translate(s, z), -z) == s);
      CHECK(translate(s, z).size() == s.size());
      CHECK(min_distance(translate(s, z), translate(t, z)) == doctest::Approx(min_distance(s, t)));
      CHECK(min_distance(s, translate(s, z)) == doctest::Approx(min_distance(translate(s, z), s)));
    }
  }

  TEST_CASE("min_distance") {
    const FiniteSet o(3, {LatticePoint{0, 0, 0}});
    CHECK(min_distance(o, o) == 0.0);
    CHECK(min_distance(o, FiniteSet(3, {LatticePoint{3, 4, 0}})) == doctest::Approx(5.0));
    const FiniteSet ball = make_shape({ShapeKind::ball, 1}, 3);
    CHECK(min_distance(ball, translate(ball, LatticePoint{10, 0, 0})) == doctest::Approx(8.0));
    CHECK(intersects(ball, translate(ball, LatticePoint{2, 0, 0})));
    CHECK_FALSE(intersects(ball, translate(ball, LatticePoint{3, 0, 0})));
  }

  TEST_CASE("canonical order and lookups") {
    const FiniteSet s(2, {LatticePoint{1, 0}, LatticePoint{0, 5}, LatticePoint{0, -1}});
    CHECK(s[0] == LatticePoint{0, -1});
    CHECK(s[2] == LatticePoint{1, 0});
    CHECK(s.index_of(LatticePoint{0, 5}) == 1u);
    CHECK_FALSE(s.index_of(LatticePoint{7, 7}).has_value());
    CHECK(s.diameter() == doctest::Approx(6.0));
    CHECK(s.max_norm() == doctest::Approx(5.0));
  }
}
