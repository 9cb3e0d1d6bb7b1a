#include <doctest.h>

#include <cmath>

#include "frontlab/errors.hpp"
#include "frontlab/init_data.hpp"
#include "frontlab/solver.hpp"

using namespace frontlab;

namespace {

IgnitionProfile canonical() { return IgnitionProfile::make(0.25, 1.0, 2.0, 0.5); }

// Richardson-extrapolated radial Laplacian of the directly integrated kernel.
double fd_laplacian(const MollifierKernel& k, double r, double h) {
  const int d = k.dim();
  auto lap = [&](double s) {
    const double c = k.exact(r), p = k.exact(r + s), m = k.exact(r - s);
    return (p - 2 * c + m) / (s * s) + (d - 1) / r * (p - m) / (2 * s);
  };
  return (4 * lap(h / 2) - lap(h)) / 3;
}

}  // namespace

TEST_SUITE("init_data") {
  TEST_CASE("mollifier has unit mass and the searched ball mass") {
    const double expected[] = {0.4418, 0.3933, 0.3562};
    for (int d = 1; d <= 3; ++d) {
      MollifierKernel k(d, kMollifierA);
      CHECK(k.mass() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(k.ball_mass(kMollifierN) >= 1.0 / 3.0);
      CHECK(k.ball_mass(kMollifierN) == doctest::Approx(expected[d - 1]).epsilon(1e-3));
      for (double r : {0.0, 0.1, 0.27, 0.49, 0.52})
        CHECK(k(r) == doctest::Approx(k.exact(r)).epsilon(1e-6).scale(1.0));
      CHECK(k.marginal_tail(0.0) == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(k.marginal_tail(-1.0) == 1.0);
    }
  }

  TEST_CASE("scaled bump vanishes beyond R") {
    for (int d = 1; d <= 3; ++d) {
      MollifiedBump b(d, kMollifierA, 4.0);
      CHECK(b(4.0) == 0.0);
      CHECK(b(4.0 * (0.5 + kMollifierA)) == 0.0);
      CHECK(b(1.0) > 0.0);
    }
    CHECK_THROWS_AS(MollifiedBump(2, 0.2, 4.0), ConfigError);
    CHECK_THROWS_AS(MollifiedBump(2, 0.05, 0.5), ConfigError);
  }

  TEST_CASE("bump Laplacian is non-negative in the harmonic zone") {
    const MollifiedBump b(2, 0.1, 4.0);
    double worst = 0.0;
    for (double r = 0.5; r <= 3.9; r += 0.01) worst = std::min(worst, b.laplacian(r));
    CHECK(worst >= -1e-8);
    // the closed form agrees with extrapolated finite differences of the quadrature
    const auto& k = b.kernel();
    for (double r : {0.05, 0.2, 0.35, 0.45, 0.55}) {
      const double fd = fd_laplacian(k, r, 4e-3);
      CHECK(k.laplacian(r) == doctest::Approx(fd).epsilon(2e-3).scale(1.0));
    }
  }

  TEST_CASE("psi satisfies the reparametrization conditions") {
    const auto p = canonical();
    const Reparam psi(p.theta1() / 4, p);
    const double q = psi.q();
    CHECK(psi(0.0) == 0.0);
    CHECK(psi(q) == doctest::Approx(q).epsilon(1e-12));
    CHECK(psi(q / 3) == doctest::Approx(1 - 2 * p.theta1() / 3).epsilon(1e-12));
    CHECK(psi.plateau() <= q);
    double prev = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double v = q * i / 4000.0;
      CHECK(psi(v) >= prev - 1e-13);
      CHECK(psi.d1(v) >= 0.0);
      if (v < q / 3) CHECK(psi.d2(v) == 0.0);
      CHECK(std::abs(psi.d2(v)) <= psi.L() + 1e-12);
      prev = psi(v);
    }
    // psi'' balances F0: kappa F0(psi) along the curved piece
    const double v = 0.5 * (psi.knee() + psi.plateau());
    const double e = 1e-5;
    CHECK((psi(v + e) - 2 * psi(v) + psi(v - e)) / (e * e) == doctest::Approx(psi.d2(v)).epsilon(1e-3));
  }

  TEST_CASE("1D datum for B_5 is sandwiched and a sub-solution at h = 0.05") {
    const auto p = canonical();
    const double h = 0.05;
    DatumOptions opt;
    const double R = minimal_mollifier_scale(p, 1, h, opt, 5.0);
    opt.R = R;
    const double R0 = (kMollifierN + 0.5 + kMollifierA) * R;
    GridSpec g = GridSpec::covering(1, {-5 - R0 - 2, 0, 0}, {5 + R0 + 2, 0, 0}, h);
    const auto d = build_initial_datum(Ball{{0, 0, 0}, 5.0}, p, g, opt);
    CHECK(d.R0 == doctest::Approx(R0));
    CHECK(d.min_defect >= -1e-6);
    const double q = 1 - d.theta_star;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double x = std::abs(g.coord(n)[0]);
      if (x <= 5.0) CHECK(d.field[n] == q);
      if (x >= 5.0 + d.R0) CHECK(d.field[n] == 0.0);
      CHECK(d.field[n] <= q);
    }
  }

  TEST_CASE("whole space gives the constant datum") {
    GridSpec g = GridSpec::covering(2, {0, 0, 0}, {2, 2, 0}, 0.1);
    const auto d = build_initial_datum(WholeSpace{}, canonical(), g);
    for (double v : d.field.values) CHECK(v == 1 - 0.0625);
  }

  TEST_CASE("half-space datum is transversally invariant and shifts affinely") {
    const auto p = canonical();
    const double h = 0.25;
    DatumOptions opt;
    opt.R = minimal_mollifier_scale(p, 2, h, opt);
    const double R0 = (kMollifierN + 0.5 + kMollifierA) * *opt.R;
    GridSpec g = GridSpec::covering(2, {-10, -2, 0}, {R0 + 10, 2, 0}, h);
    const auto d = build_halfspace_datum({1, 0, 0}, 0.0, p, g, {}, opt);
    CHECK(d.min_defect >= -1e-6);
    for (std::size_t i = 0; i < g.shape[0]; ++i)
      for (std::size_t j = 1; j < g.shape[1]; ++j) CHECK(d.field[g.index(i, j, 0)] == d.field[g.index(i, 0, 0)]);
    // the shift changes F0 along the profile, so this R is not searched for it
    opt.a_shift = 0.05;
    opt.verify = false;
    const auto s = build_halfspace_datum({1, 0, 0}, 0.0, p, g, {}, opt);
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(s.field[n] == doctest::Approx(0.95 * d.field[n] + 0.05).epsilon(1e-14));
  }

  TEST_CASE("the datum is a sub-solution: solution increases in time") {
    const auto p = canonical();
    const double h = 0.1;
    DatumOptions opt;
    opt.R = minimal_mollifier_scale(p, 1, h, opt);
    const double R0 = (kMollifierN + 0.5 + kMollifierA) * *opt.R;
    GridSpec g = GridSpec::covering(1, {-5, 0, 0}, {R0 + 10, 0, 0}, h);
    const auto d = build_halfspace_datum({1, 0, 0}, 0.0, p, g, {}, opt);
    SolverOptions so;
    so.boundary.lower[0] = {BoundaryKind::Frozen, d.field[0]};
    SolverState s(d.field, homogeneous_reaction(p), so);
    run(s, 1.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) worst = std::min(worst, s.field[n] - d.field[n]);
    CHECK(worst >= -10 * opt.tol);
  }

  TEST_CASE("under-resolved grids are refused") {
    const auto p = canonical();
    DatumOptions opt;
    opt.R = 4.0;
    GridSpec g = GridSpec::covering(1, {-20, 0, 0}, {20, 0, 0}, 0.1);
    CHECK_THROWS_AS(build_initial_datum(Ball{{0, 0, 0}, 5.0}, p, g, opt), ConfigError);
    opt.R = 20.0;
    g = GridSpec::covering(1, {-40, 0, 0}, {40, 0, 0}, 0.1);
    CHECK_THROWS_WITH_AS(build_initial_datum(Ball{{0, 0, 0}, 5.0}, p, g, opt), doctest::Contains("grid point"),
                         ConstructionError);
  }

  TEST_CASE("general sets use the convolution path") {
    const auto p = canonical();
    DatumOptions opt;
    opt.verify = false;
    opt.R = 40.0;
    GridSpec g = GridSpec::covering(2, {-70, -70, 0}, {70, 70, 0}, 0.25);
    Box b;
    b.lo = {-3, -2, 0};
    b.hi = {3, 2, 0};
    const auto d = build_initial_datum(b, p, g, opt);
    const double q = 1 - d.theta_star;
    const auto in = rasterize(b, g);
    const auto dist = distance_to_mask(g, in);
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (in[n]) CHECK(d.field[n] == q);
      if (dist[n] >= d.R0) CHECK(d.field[n] == 0.0);
      CHECK(d.field[n] >= 0.0);
      CHECK(d.field[n] <= q);
    }
  }
}
