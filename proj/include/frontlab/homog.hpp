#pragma once

#include <cstdint>
#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/hj.hpp"
#include "frontlab/medium.hpp"
#include "frontlab/speed_table.hpp"

namespace frontlab {

// u_eps(t, x) = u(t / eps, x / eps): snapshots at micro times t / eps, subsampled every
// `stride` nodes. Throws listing the macro times that have no matching snapshot.
std::vector<ScalarField> rescale(const std::vector<ScalarField>& micro, double epsilon,
                                 const std::vector<double>& t_macro, std::size_t stride = 1);

struct HomogError {
  double interior_sup = 0.0;  // sup |u - 1| on Theta shrunk by delta
  double exterior_sup = 0.0;  // sup |u| off Theta inflated by delta
  double symdiff = 0.0;       // |{u >= 1/2} xor Theta|
  double theta_measure = 0.0;
  bool degenerate = false;    // the shrunk or inflated region is empty on the grid
};

HomogError homog_error(const ScalarField& u_eps, const ReachabilitySet& theta, double delta);

struct HomogSpec {
  MediumSpec medium;
  std::vector<std::uint64_t> seeds;
  SetDescriptor A = Ball{{0, 0, 0}, 1.0};
  std::vector<double> epsilons;  // strictly decreasing
  std::vector<double> times{1.0};
  double delta = 0.1;
  double h_micro = 0.25;
  SpeedTable speed;              // c*(e) for Theta
  Point y_shift{0, 0, 0};        // micro shift of the initial set
  double psi_margin = 0.0;       // macro inward margin of A
  double margin = 2.0;           // extra macro room beyond c1 t_max
  int workers = 0;

  void validate() const;
};

struct HomogRow {
  double epsilon = 0.0, t = 0.0;
  std::uint64_t seed = 0;
  HomogError error;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
};

struct HomogReport {
  std::vector<HomogRow> rows;  // epsilon-major, then time, then seed
  // per (epsilon, time): worst error over seeds, in the same order
  std::vector<HomogRow> worst;
};

HomogReport run_homogenization(const HomogSpec& spec);

struct ExclusivitySpec {
  MediumSpec medium;
  std::vector<std::uint64_t> seeds{0};
  Point e{1, 0, 0};        // axis-aligned
  double a = 0.05;
  double horizon = 200.0;
  double h = 0.25;
  double c_star = 0.0;     // 0: c0 of the profile
  double margin_lo = 0.2;  // slab {x.e - c* t in [margin_lo t, margin_hi t]}
  double margin_hi = 1.0;
  double burn_in = 40.0;
  std::size_t samples = 20;
  double theta_star = 0.0;
  double M_star = 0.0;     // 0: range check uses theta* only
  bool enforce_range = true;
  double transverse = 8.0;
  int workers = 0;
};

struct ExclusivityRecord {
  std::vector<double> times;
  std::vector<double> ahead_sup;  // max over seeds per time
  double worst_after_burn_in = 0.0;
  double a = 0.0;
  bool range_enforced = true;
};

ExclusivityRecord exclusivity_probe(const ExclusivitySpec& spec);

struct Constants {
  double c0 = 0.0;
  double kappa0 = 0.0;      // entry lag: mean of T(l) - l / c0, clamped at 0
  double mu_star = 0.0;     // min u_t on {theta* <= u <= 1 - theta*} after kappa*
  double kappa_star = 0.0;  // time after which the band slope has settled
  double M_star = 0.0;      // (1 + M) / mu*
  double D2 = 0.0;          // max (R0 + l) / (1 + T_theta*(R0 + l)), R0 the datum's support edge
  double h = 0.0, t_end = 0.0;
};

struct CalibrationSpec {
  IgnitionProfile profile = IgnitionProfile::make(0.25, 1.0, 2.0, 0.5);
  double h = 0.25;
  double t_end = 500.0;
  double theta_star = 0.0;
  std::vector<double> probes{20, 40, 60, 80};
};

// Homogeneous 1D run from the mollified half-space datum.
Constants calibrate(const CalibrationSpec& spec);

enum class PerturbationKind { LevelSet, Uniform };

struct PerturbationSpec {
  MediumSpec medium;
  std::vector<std::uint64_t> seeds;
  PerturbationKind kind = PerturbationKind::LevelSet;
  double eta = 0.02;
  double t0 = 100.0;
  double y = 60.0;            // probe distance past the datum's support edge, first axis
  double R = 0.0;             // 0: D2 (1 + expected T)
  double h = 0.25;
  double factor = 2.0;        // level-set variant: f2 = factor f1 where u1(t0) >= 1 - eta
  double theta_star = 0.0;
  Constants constants;        // from calibrate; M_star = 0 triggers a calibration run
  bool enforce_range = true;
  int workers = 0;
};

struct PerturbationRow {
  std::uint64_t seed = 0;
  double T1 = 0.0, T2 = 0.0, bound = 0.0;
  bool holds = false;
};

struct PerturbationReport {
  std::vector<PerturbationRow> rows;
  double slack = 0.0, M_star = 0.0, R = 0.0;
  bool all_hold = false;
};

// Checks T_{u2}(y) >= (1 + M* eta)^-1 (T_{u1}(y) - t0 - slack), slack = 2 kappa* + kappa0.
PerturbationReport perturbation_check(const PerturbationSpec& spec);

}  // namespace frontlab
