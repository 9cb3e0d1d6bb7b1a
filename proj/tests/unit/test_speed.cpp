#include <doctest.h>

#include <cmath>

#include "frontlab/errors.hpp"
#include "frontlab/speed.hpp"

using namespace frontlab;

namespace {

IgnitionProfile canonical() { return IgnitionProfile::make(0.25, 1.0, 2.0, 0.5); }

EnsembleSpec homogeneous_spec(int dim) {
  EnsembleSpec s;
  s.medium.dim = dim;
  s.medium.a_map.kind = AmplitudeMap::Kind::Constant;
  s.medium.a_map.value = 0.0;
  for (std::uint64_t k = 0; k < 8; ++k) s.seeds.push_back(k + 1);
  s.h = 0.25;
  s.probes = {10, 20, 40};
  s.bootstrap = 50;
  return s;
}

}  // namespace

TEST_SUITE("speed") {
  TEST_CASE("c0 of the canonical profile") {
    const double c0 = compute_c0(canonical());
    CHECK(c0 == doctest::Approx(0.583413).epsilon(1e-5));
    CHECK(c0 < 2.0);
  }

  TEST_CASE("c0 scales like the square root of the reaction") {
    const auto p = canonical();
    const double c0 = compute_c0(p);
    for (double lam : {0.5, 2.0, 4.0})
      CHECK(compute_c0(p.scaled(lam)) == doctest::Approx(std::sqrt(lam) * c0).epsilon(5e-3));
  }

  TEST_CASE("homogeneous half-space runs travel at c0") {
    const auto s = homogeneous_spec(1);
    const auto row = estimate_front_speed(s, {1, 0, 0});
    const double c0 = compute_c0(s.medium.profile);
    CHECK(row.c_star == doctest::Approx(c0).epsilon(0.02));
    for (double sd : row.sd_T) CHECK(sd == doctest::Approx(0.0).scale(1.0));
    const auto back = estimate_front_speed(s, {-1, 0, 0});
    CHECK(back.c_star == doctest::Approx(row.c_star).epsilon(1e-12));
  }

  TEST_CASE("homogeneous 2D speed is isotropic up to the grid") {
    auto s = homogeneous_spec(2);
    s.transverse = 8;
    const auto a = estimate_front_speed(s, {1, 0, 0});
    const auto b = estimate_front_speed(s, {1, 1, 0});
    CHECK(a.c_star == doctest::Approx(b.c_star).epsilon(0.05));
  }

  TEST_CASE("mean linearity pairs and bad inputs") {
    auto s = homogeneous_spec(1);
    s.probes = {8, 16, 32};
    const auto rep = mean_linearity(s, {1, 0, 0}, s.probes);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.exponent < 1.0);
    s.seeds = {1, 1};
    CHECK_THROWS_AS(run_halfspace_ensemble(s, {1, 0, 0}), ConfigError);
    auto f = homogeneous_spec(1);
    CHECK_THROWS_AS(fluctuation_stats(f, {1, 0, 0}), ConfigError);
  }

  TEST_CASE("unreached probes name the seeds") {
    auto s = homogeneous_spec(1);
    s.t_end = 1.0;
    CHECK_THROWS_WITH_AS(run_halfspace_ensemble(s, {1, 0, 0}), doctest::Contains("seeds 1 2"), NumericError);
  }

  TEST_CASE("wulff estimate of the homogeneous medium is a disc") {
    WulffSpec w;
    w.medium.dim = 2;
    w.medium.a_map.kind = AmplitudeMap::Kind::Constant;
    w.medium.a_map.value = 0.0;
    w.h = 0.25;
    w.t_end = 20;
    w.angles = 72;
    const auto est = estimate_wulff(w);
    double lo = 1e9, hi = 0;
    for (double r : est.radius) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK(hi - lo < 0.05);
    CHECK(hi < compute_c0(w.medium.profile) + 0.15);
  }
}
