#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/medium.hpp"

namespace frontlab {

enum class BoundaryKind { Frozen, Neumann, Periodic };

struct Side {
  BoundaryKind kind = BoundaryKind::Frozen;
  double value = 0.0;  // ghost value for Frozen
};

struct Boundary {
  std::array<Side, 3> lower{}, upper{};
  static Boundary frozen(double v = 0.0);
};

// Reaction sampled on the grid: rate = max(multiplier[n] F0(u) + offset[n], 0)
// where F0(u) > 0, and 0 elsewhere. Empty vectors mean 1 and 0.
struct GridReaction {
  IgnitionProfile profile = IgnitionProfile::make(0.25, 1.0, 2.0, 0.5);
  std::vector<double> multiplier;
  std::vector<double> offset;

  double rate(std::size_t n, double u) const noexcept {
    const double f0 = profile(u);
    if (f0 == 0.0) return 0.0;
    double r = (multiplier.empty() ? 1.0 : multiplier[n]) * f0;
    if (!offset.empty()) r = std::max(r + offset[n], 0.0);
    return r;
  }
  double lipschitz() const noexcept;
};

GridReaction make_grid_reaction(const RandomMedium& m, const GridSpec& g, const Frame& frame = {});
GridReaction homogeneous_reaction(const IgnitionProfile& p);

// Largest stable, monotone explicit step: 1 - 2d dt/h^2 - dt Lip >= 0.
double cfl_bound(const GridSpec& g, double lipschitz);

struct SolverOptions {
  double safety = 0.9;
  double dt = 0.0;  // 0 = safety * cfl_bound
  double flush_below = 1e-30;
  Boundary boundary;
};

struct SolverState {
  ScalarField field;
  double t = 0.0;
  double dt = 0.0;
  double last_dt = 0.0;
  std::size_t step_count = 0;
  double clamp_total = 0.0;
  std::size_t clamp_events = 0;
  GridReaction reaction;
  Boundary boundary;
  double flush_below = 1e-30;
  double dt_max = 0.0;
  std::vector<double> previous;  // values before the last accepted step
  // Planes along axis 0 holding nonzero values, for field and previous;
  // lo > hi means all zero. active_* is the plane range touched by the last step.
  long extent_lo = 0, extent_hi = -1, prev_lo = 0, prev_hi = -1;
  long active_lo = 0, active_hi = -1;

  SolverState(ScalarField init, GridReaction r, const SolverOptions& opt = {});
};

SolverState& step(SolverState& s, double dt = 0.0);

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void start(const SolverState&) {}
  virtual void after_step(const SolverState&) {}
  // Next time after t the run must land on exactly (snapshots, width probes).
  virtual double next_event(double) const { return std::numeric_limits<double>::infinity(); }
  virtual void finish(const SolverState&) {}
  // The run ends early once any observer asks to stop.
  virtual bool stop_requested() const { return false; }
};

struct RunSummary {
  double t_start = 0.0, t_end = 0.0;
  std::size_t steps = 0;
  double dt = 0.0;
  double clamp_total = 0.0;
  bool clamp_warning = false;
  double wall_seconds = 0.0;
};

RunSummary run(SolverState& s, double t_end, const std::vector<Observer*>& observers = {});

struct ArrivalTimeMap {
  GridSpec grid;
  double threshold = 0.9375;
  bool interpolated = true;
  std::vector<double> times;  // +inf when not reached

  bool reached(std::size_t n) const noexcept { return times[n] < std::numeric_limits<double>::infinity(); }
};

class ArrivalObserver : public Observer {
 public:
  explicit ArrivalObserver(double threshold, bool interpolate = true) : threshold_(threshold), interp_(interpolate) {}
  void start(const SolverState& s) override;
  void after_step(const SolverState& s) override;
  const ArrivalTimeMap& map() const noexcept { return map_; }

 private:
  double threshold_;
  bool interp_;
  ArrivalTimeMap map_;
  std::size_t pending_ = 0;
};

ArrivalTimeMap arrival_times(const ArrivalObserver& obs);

// Crossing times at a few grid points; requests a stop once all are reached.
class ProbeObserver : public Observer {
 public:
  ProbeObserver(std::vector<std::size_t> points, double threshold, bool stop_when_done = true)
      : points_(std::move(points)), threshold_(threshold), stop_(stop_when_done) {}
  void start(const SolverState& s) override;
  void after_step(const SolverState& s) override;
  bool stop_requested() const override { return stop_ && pending_ == 0; }
  const std::vector<double>& times() const noexcept { return times_; }
  bool all_reached() const noexcept { return pending_ == 0; }

 private:
  std::vector<std::size_t> points_;
  double threshold_;
  bool stop_;
  std::vector<double> times_;
  std::size_t pending_ = 0;
};

class SnapshotObserver : public Observer {
 public:
  explicit SnapshotObserver(std::vector<double> times) : times_(std::move(times)) {}
  void start(const SolverState& s) override;
  void after_step(const SolverState& s) override;
  double next_event(double t) const override;
  const std::vector<ScalarField>& snapshots() const noexcept { return snaps_; }

 private:
  std::vector<double> times_;
  std::vector<ScalarField> snaps_;
};

struct WidthSample {
  double t, eta, width;
};

class WidthObserver : public Observer {
 public:
  WidthObserver(std::vector<double> etas, double theta, std::vector<double> times)
      : etas_(std::move(etas)), theta_(theta), times_(std::move(times)) {}
  void start(const SolverState& s) override;
  void after_step(const SolverState& s) override;
  double next_event(double t) const override;
  const std::vector<WidthSample>& samples() const noexcept { return samples_; }

 private:
  void record(const SolverState& s);
  std::vector<double> etas_;
  double theta_;
  std::vector<double> times_;
  std::vector<WidthSample> samples_;
};

// min of (u_new - u_old)/dt, overall and restricted to a band of u values
// at times >= t_from (interface slope).
class TimeDerivativeObserver : public Observer {
 public:
  TimeDerivativeObserver(double band_lo = 0.0, double band_hi = 1.0, double t_from = 0.0)
      : lo_(band_lo), hi_(band_hi), from_(t_from) {}
  void after_step(const SolverState& s) override;
  double min_overall() const noexcept { return min_all_; }
  double min_in_band() const noexcept { return min_band_; }

 private:
  double lo_, hi_, from_;
  double min_all_ = std::numeric_limits<double>::infinity();
  double min_band_ = std::numeric_limits<double>::infinity();
};

// Smallest L with {u >= eta} inside B_L({u >= theta}); +inf if the upper set is empty.
double transition_width(const ScalarField& f, double eta, double theta);
Mask reached_set(const ScalarField& f, double theta);

}  // namespace frontlab
