#include <doctest.h>

#include <cmath>
#include <numbers>

#include "frontlab/errors.hpp"
#include "frontlab/homog.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/speed.hpp"

using namespace frontlab;

namespace {

MediumSpec homogeneous(int dim) {
  MediumSpec m;
  m.dim = dim;
  m.a_map.kind = AmplitudeMap::Kind::Constant;
  m.a_map.value = 0.0;
  return m;
}

std::vector<ScalarField> micro_run(double t_end, std::vector<double> times) {
  const auto g = GridSpec::covering(1, {-40, 0, 0}, {40, 0, 0}, 0.25);
  ScalarField f(g);
  for (std::size_t n = 0; n < g.size(); ++n) f[n] = std::abs(g.coord(n)[0]) <= 5 ? 0.75 : 0.0;
  SolverState s(std::move(f), homogeneous_reaction(homogeneous(1).profile), {});
  SnapshotObserver obs(std::move(times));
  run(s, t_end, {&obs});
  return obs.snapshots();
}

}  // namespace

TEST_SUITE("homog") {
  TEST_CASE("rescale: identity, width identity and missing times") {
    const auto snaps = micro_run(20, {10, 20});
    const auto same = rescale(snaps, 1.0, {10, 20});
    CHECK(same[1].values == snaps[1].values);
    const auto half = rescale(snaps, 0.5, {5, 10});
    CHECK(half[1].grid.h == doctest::Approx(0.125));
    const double w = transition_width(snaps[1], 0.01, 0.6);
    REQUIRE(std::isfinite(w));
    CHECK(transition_width(half[1], 0.01, 0.6) == doctest::Approx(0.5 * w));
    // two eps values agree where their grids coincide
    const auto sub = rescale(snaps, 0.5, {10}, 2);
    for (std::size_t n = 0; n < sub[0].grid.size(); ++n) CHECK(sub[0][n] == half[1][2 * n]);
    CHECK_THROWS_WITH_AS(rescale(snaps, 0.5, {3}), doctest::Contains("3 (micro 6)"), ConfigError);
  }

  TEST_CASE("homog_error vanishes on an exact indicator") {
    const auto g = GridSpec::covering(2, {-3, -3, 0}, {3, 3, 0}, 0.05);
    const auto theta = theta_convex(Ball{{0, 0, 0}, 1.0}, SpeedTable::constant(2, 0.5), 1.0, 2);
    const auto in = theta.mask(g);
    ScalarField u(g);
    for (std::size_t n = 0; n < g.size(); ++n) u[n] = in[n];
    const auto e = homog_error(u, theta, 0.1);
    CHECK(e.interior_sup == 0.0);
    CHECK(e.exterior_sup == 0.0);
    CHECK(e.symdiff == 0.0);
    CHECK(e.theta_measure == doctest::Approx(std::numbers::pi * 2.25).epsilon(0.02));
  }

  TEST_CASE("homogeneous homogenization errors shrink with epsilon") {
    HomogSpec s;
    s.medium = homogeneous(2);
    s.seeds = {1};
    s.epsilons = {1.0 / 4, 1.0 / 8};
    s.margin = 0.5;
    s.speed = SpeedTable::constant(2, compute_c0(s.medium.profile));
    const auto rep = run_homogenization(s);
    REQUIRE(rep.worst.size() == 2);
    CHECK(rep.worst[1].error.interior_sup <= rep.worst[0].error.interior_sup);
    CHECK(rep.worst[1].error.exterior_sup <= rep.worst[0].error.exterior_sup);
    s.epsilons = {1.0 / 8, 1.0 / 4};
    CHECK_THROWS_AS(run_homogenization(s), ConfigError);
  }

  TEST_CASE("exclusivity probe") {
    ExclusivitySpec s;
    s.medium = homogeneous(1);
    s.a = 0.0;
    s.horizon = 200;
    s.burn_in = 150;  // the wave's own exponential tail has left the slab
    const auto zero = exclusivity_probe(s);
    CHECK(zero.worst_after_burn_in <= 1e-6);
    s.a = 0.05;
    CHECK_THROWS_AS(exclusivity_probe(s), ConfigError);
    s.enforce_range = false;
    const auto a = exclusivity_probe(s);
    s.margin_lo = 0.4;
    const auto b = exclusivity_probe(s);
    for (std::size_t k = 0; k < a.times.size(); ++k) CHECK(b.ahead_sup[k] <= a.ahead_sup[k]);
    CHECK(a.worst_after_burn_in >= 0.05);
  }

  TEST_CASE("calibration constants") {
    CalibrationSpec c;
    const auto k = calibrate(c);
    CHECK(k.mu_star > 0.0);
    CHECK(k.kappa0 <= c.t_end / 2);
    CHECK(k.M_star == doctest::Approx(2.0 / k.mu_star));
    c.h = 0.125;
    const auto fine = calibrate(c);
    CHECK(std::abs(fine.mu_star - k.mu_star) <= 0.1 * k.mu_star);
  }

  TEST_CASE("perturbation check: eta = 0 leaves arrival times unchanged") {
    PerturbationSpec p;
    p.medium = homogeneous(1);
    p.seeds = {3};
    p.eta = 0.0;
    p.t0 = 0.0;
    p.factor = 1.0;
    const auto r = perturbation_check(p);
    CHECK(r.rows[0].T2 == r.rows[0].T1);
    CHECK(r.all_hold);
    p.eta = 0.02;
    CHECK_THROWS_AS(perturbation_check(p), ConfigError);
  }
}
