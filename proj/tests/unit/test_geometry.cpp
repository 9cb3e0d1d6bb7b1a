#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "frontlab/errors.hpp"
#include "frontlab/geometry.hpp"

using namespace frontlab;

TEST_SUITE("geometry") {
  TEST_CASE("distance transform matches brute force in 2D") {
    GridSpec g = GridSpec::covering(2, {0, 0, 0}, {6.3, 4.9, 0}, 0.1);
    std::mt19937_64 rng(3);
    std::bernoulli_distribution coin(0.01);
    Mask m(g.size());
    for (auto& v : m) v = coin(rng);
    const auto d = distance_to_mask(g, m);
    for (std::size_t n = 0; n < g.size(); n += 7) {
      double best = std::numeric_limits<double>::infinity();
      const auto p = g.coord(n);
      for (std::size_t k = 0; k < g.size(); ++k)
        if (m[k]) {
          const auto q = g.coord(k);
          best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
        }
      CHECK(d[n] == doctest::Approx(best).epsilon(1e-12));
    }
  }

  TEST_CASE("distance transform in 3D and empty masks") {
    GridSpec g = GridSpec::covering(3, {0, 0, 0}, {1, 1, 1}, 0.1);
    Mask m(g.size(), 0);
    m[g.index(5, 5, 5)] = 1;
    const auto d = distance_to_mask(g, m);
    CHECK(d[g.index(0, 0, 0)] == doctest::Approx(std::sqrt(3.0) * 0.5));
    CHECK(d[g.index(5, 5, 9)] == doctest::Approx(0.4));
    Mask e(g.size(), 0);
    const auto de = distance_to_mask(g, e);
    CHECK(std::isinf(de[0]));
  }

  TEST_CASE("set descriptors") {
    CHECK(contains(Ball{{0, 0, 0}, 1.0}, {0.6, 0.6, 0}, 2));
    CHECK_FALSE(contains(Ball{{0, 0, 0}, 1.0}, {0.8, 0.8, 0}, 2));
    CHECK(contains(HalfSpace{{1, 0, 0}, 2.0}, {2.0, 5.0, 0}, 2));
    Polytope sq{{{{1, 0, 0}, 1}, {{-1, 0, 0}, 1}, {{0, 1, 0}, 1}, {{0, -1, 0}, 1}}};
    CHECK(contains(sq, {0.9, -0.9, 0}, 2));
    CHECK_FALSE(contains(sq, {1.1, 0, 0}, 2));
    CHECK(polygon_area(to_polygon(sq)) == doctest::Approx(4.0));
    CHECK(support_function(Ball{{1, 0, 0}, 2.0}, {1, 0, 0}, 2) == doctest::Approx(3.0));
    CHECK(support_function(sq, {1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0}, 2) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(to_polygon(HalfSpace{}), ConfigError);
  }

  TEST_CASE("half-plane clipping of a square") {
    Polygon sq{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
    const double s = 1 / std::sqrt(2.0);
    Polygon c = clip_halfplane(sq, {s, s}, 0.0);
    CHECK(polygon_area(c) == doctest::Approx(2.0));
    CHECK(polygon_contains(c, {-0.5, -0.5}));
    CHECK_FALSE(polygon_contains(c, {0.5, 0.5}));
  }

  TEST_CASE("hausdorff of sampled boundaries") {
    Polygon a = regular_polygon({0, 0}, 1.0, 400);
    Polygon b = regular_polygon({0, 0}, 1.1, 400);
    CHECK(hausdorff(sample_boundary(a, 2000), sample_boundary(b, 2000)) == doctest::Approx(0.1).epsilon(0.02));
  }
}
