#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/medium.hpp"
#include "frontlab/speed_table.hpp"

namespace frontlab {

// Ignition front speed by shooting U'' + cU' + F0(U) = 0 in the phase plane and bisecting on c.
double compute_c0(const IgnitionProfile& p, double tol = 1e-10);

struct EnsembleSpec {
  MediumSpec medium;
  std::vector<std::uint64_t> seeds;
  double h = 0.25;
  std::vector<double> probes;  // distances l along e
  double back = 8.0;           // domain length behind the initial interface
  double ahead = 8.0;          // domain length past the farthest probe
  double transverse = 8.0;     // periodic width for d >= 2, lattice units
  double t_end = 0.0;          // 0: from the probes and c0
  double theta_star = 0.0;     // 0: theta1 / 4
  int workers = 0;
  int bootstrap = 1000;
  std::uint64_t bootstrap_seed = 20240607;

  void validate() const;
  double threshold() const;
};

struct MemberRecord {
  std::uint64_t seed = 0;
  std::vector<double> T;  // arrival time per probe, +inf if unreached
  double wall_seconds = 0.0;
  std::size_t steps = 0;
  bool window_clipped = false;
};

struct HalfspaceEnsemble {
  Point e{1, 0, 0};
  std::vector<double> probes;
  std::vector<MemberRecord> members;  // seed order of the spec
};

// Step data (1 - theta*) chi_{x.e <= 0}, arrival times at l e. Throws if a probe stays unreached.
HalfspaceEnsemble run_halfspace_ensemble(const EnsembleSpec& spec, const Point& e);

struct SpeedRow {
  Point e{1, 0, 0};
  double tbar = 0.0, c_star = 0.0, stderr_c = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95% bootstrap interval for c*
  double amplitude = 0.0;           // A in T(l)/l = Tbar + A l^-gamma
  double gamma = 0.0;
  double l_min = 0.0, l_max = 0.0;
  std::vector<double> mean_T, sd_T;
};

SpeedRow fit_front_speed(const HalfspaceEnsemble& ens, const EnsembleSpec& spec);
SpeedRow estimate_front_speed(const EnsembleSpec& spec, const Point& e);
SpeedTable speed_table(const std::vector<SpeedRow>& rows, int dim);

struct DefectRow {
  double l = 0.0, m = 0.0, D = 0.0, err = 0.0;
};

struct LinearityReport {
  std::vector<DefectRow> rows;
  double exponent = 0.0, ci_lo = 0.0, ci_hi = 0.0;  // growth of D vs l + m
};

// Triples (l, m, l + m) all drawn from the ensemble's probes.
LinearityReport mean_linearity(const HalfspaceEnsemble& ens, const std::vector<std::array<double, 2>>& pairs,
                               const EnsembleSpec& spec);
LinearityReport mean_linearity(const EnsembleSpec& spec, const Point& e, const std::vector<double>& l_list);

struct DistanceStats {
  double distance = 0.0, mean = 0.0, sd = 0.0;
  std::array<double, 5> quantiles{};  // 5, 25, 50, 75, 95 %
};

struct FluctuationReport {
  std::vector<DistanceStats> per_distance;
  double exponent = 0.0, ci_lo = 0.0, ci_hi = 0.0, prefactor = 0.0;
  std::vector<double> fit_residuals;  // log sd minus fit, per distance
  double tail_C = 0.0;                // envelope constant
  double tail_rms = 0.0;              // rms log-residual of the tail fit
  double rho = 0.0, beta1 = 0.0;
};

inline constexpr std::size_t kMinFluctuationSeeds = 32;

FluctuationReport fluctuation_stats(const HalfspaceEnsemble& ens, const EnsembleSpec& spec);
FluctuationReport fluctuation_stats(const EnsembleSpec& spec, const Point& e);

struct WulffSpec {
  MediumSpec medium;
  std::uint64_t seed = 0;
  double h = 0.25;
  double source_radius = 2.0;
  double t_end = 40.0;
  double domain = 0.0;  // half-width; 0: from c1 t_end
  double theta_star = 0.0;
  std::size_t angles = 360;
};

struct WulffEstimate {
  double t = 0.0;
  std::vector<double> angle, radius;  // boundary of the reached set / t
  std::vector<Point> directions;
  std::vector<double> support;  // support function of the normalized set
  Polygon boundary;
};

WulffEstimate estimate_wulff(const WulffSpec& spec);
// Normalized boundary of a reached-set field, ray-marched from `center`.
WulffEstimate wulff_from_field(const ScalarField& f, double threshold, const Point& center, double t,
                               std::size_t angles);

// Range of dependence implied by the medium's bump support and truncation.
double dependence_range(const MediumSpec& m);

}  // namespace frontlab
