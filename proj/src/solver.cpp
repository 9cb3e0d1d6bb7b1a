#include "frontlab/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "frontlab/errors.hpp"
#include "frontlab/log.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stats {
  double clamp = 0.0;
  std::size_t events = 0;
  long bad = -1;
};

struct HomRate {
  const IgnitionProfile& p;
  double operator()(std::size_t, double u) const noexcept { return p(u); }
};
struct MulRate {
  const IgnitionProfile& p;
  const double* m;
  double operator()(std::size_t n, double u) const noexcept {
    const double f = p(u);
    return f == 0.0 ? 0.0 : m[n] * f;
  }
};
struct FullRate {
  const GridReaction& r;
  double operator()(std::size_t n, double u) const noexcept { return r.rate(n, u); }
};

inline double ghost_left(const Side& s, const double* row, std::size_t len) {
  switch (s.kind) {
    case BoundaryKind::Frozen: return s.value;
    case BoundaryKind::Neumann: return row[0];
    case BoundaryKind::Periodic: return row[len - 1];
  }
  return 0.0;
}
inline double ghost_right(const Side& s, const double* row, std::size_t len) {
  switch (s.kind) {
    case BoundaryKind::Frozen: return s.value;
    case BoundaryKind::Neumann: return row[len - 1];
    case BoundaryKind::Periodic: return row[0];
  }
  return 0.0;
}

// Fused update over planes [p_lo, p_hi] of axis 0. The grid is viewed as
// (A, B, C) with C contiguous; axis 0 is a (3D), b (2D) or c (1D).
template <int D, class Rate>
void sweep(const GridSpec& g, const Boundary& bc, const double* u, double* out, double dt, const Rate& rate,
           double flush, long p_lo, long p_hi, Stats& st) {
  const std::size_t C = g.shape[D - 1];
  const std::size_t B = D >= 2 ? g.shape[D - 2] : 1;
  const std::size_t A = D == 3 ? g.shape[0] : 1;
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double center = 2.0 * D;
  const Side& cl = bc.lower[D - 1];
  const Side& ch = bc.upper[D - 1];

  std::vector<double> const_b_lo, const_b_hi, const_a_lo, const_a_hi;
  if constexpr (D >= 2) {
    const_b_lo.assign(C, bc.lower[D - 2].value);
    const_b_hi.assign(C, bc.upper[D - 2].value);
  }
  if constexpr (D == 3) {
    const_a_lo.assign(C, bc.lower[0].value);
    const_a_hi.assign(C, bc.upper[0].value);
  }

  auto finish = [&](double uc, double nb, std::size_t n) {
    double v = uc + dt * ((nb - center * uc) * inv_h2 + rate(n, uc));
    if (!(v >= flush)) {
      if (v != v) {
        st.bad = long(n);
      } else if (v < 0.0) {
        st.clamp -= v;
        ++st.events;
      }
      v = 0.0;
    } else if (v > 1.0) {
      st.clamp += v - 1.0;
      ++st.events;
      v = 1.0;
    }
    return v;
  };

  const std::size_t a0 = D == 3 ? std::size_t(p_lo) : 0, a1 = D == 3 ? std::size_t(p_hi) : A - 1;
  const std::size_t b0 = D == 2 ? std::size_t(p_lo) : 0, b1 = D == 2 ? std::size_t(p_hi) : B - 1;
  const std::size_t j0 = D == 1 ? std::size_t(p_lo) : 0, j1 = D == 1 ? std::size_t(p_hi) : C - 1;

  for (std::size_t ia = a0; ia <= a1; ++ia) {
    for (std::size_t ib = b0; ib <= b1; ++ib) {
      const std::size_t off = (ia * B + ib) * C;
      const double* r = u + off;
      double* o = out + off;
      const double *bl = nullptr, *bh = nullptr, *al = nullptr, *ah = nullptr;
      if constexpr (D >= 2) {
        const Side& sl = bc.lower[D - 2];
        const Side& sh = bc.upper[D - 2];
        if (ib > 0) bl = r - C;
        else bl = sl.kind == BoundaryKind::Frozen ? const_b_lo.data()
                  : sl.kind == BoundaryKind::Neumann ? r : u + (ia * B + B - 1) * C;
        if (ib + 1 < B) bh = r + C;
        else bh = sh.kind == BoundaryKind::Frozen ? const_b_hi.data()
                  : sh.kind == BoundaryKind::Neumann ? r : u + (ia * B) * C;
      }
      if constexpr (D == 3) {
        const Side& sl = bc.lower[0];
        const Side& sh = bc.upper[0];
        const std::size_t plane = B * C;
        if (ia > 0) al = r - plane;
        else al = sl.kind == BoundaryKind::Frozen ? const_a_lo.data()
                  : sl.kind == BoundaryKind::Neumann ? r : u + ((A - 1) * B + ib) * C;
        if (ia + 1 < A) ah = r + plane;
        else ah = sh.kind == BoundaryKind::Frozen ? const_a_hi.data()
                  : sh.kind == BoundaryKind::Neumann ? r : u + ib * C;
      }
      auto transverse = [&](std::size_t j) {
        double s = 0.0;
        if constexpr (D >= 2) s += bl[j] + bh[j];
        if constexpr (D == 3) s += al[j] + ah[j];
        return s;
      };
      if (C == 1) {
        const double nb = ghost_left(cl, r, 1) + ghost_right(ch, r, 1) + transverse(0);
        o[0] = finish(r[0], nb, off);
        continue;
      }
      if (j0 == 0) o[0] = finish(r[0], ghost_left(cl, r, C) + r[1] + transverse(0), off);
      const std::size_t lo = std::max<std::size_t>(j0, 1), hi = std::min<std::size_t>(j1, C - 2);
      for (std::size_t j = lo; j <= hi; ++j) o[j] = finish(r[j], r[j - 1] + r[j + 1] + transverse(j), off + j);
      if (j1 == C - 1) o[C - 1] = finish(r[C - 1], r[C - 2] + ghost_right(ch, r, C) + transverse(C - 1), off + C - 1);
    }
  }
}

bool zero_side(const Side& s) {
  return s.kind == BoundaryKind::Neumann || (s.kind == BoundaryKind::Frozen && s.value == 0.0);
}

std::size_t plane_size(const GridSpec& g) { return g.size() / g.shape[0]; }

bool plane_nonzero(const std::vector<double>& v, std::size_t ps, long p) {
  const double* a = v.data() + std::size_t(p) * ps;
  for (std::size_t i = 0; i < ps; ++i)
    if (a[i] != 0.0) return true;
  return false;
}

void scan_extent(const std::vector<double>& v, const GridSpec& g, long lo, long hi, long& out_lo, long& out_hi) {
  const std::size_t ps = plane_size(g);
  out_lo = hi + 1;
  out_hi = lo - 1;
  for (long p = lo; p <= hi; ++p)
    if (plane_nonzero(v, ps, p)) {
      out_lo = p;
      break;
    }
  if (out_lo > hi) return;
  for (long p = hi; p >= out_lo; --p)
    if (plane_nonzero(v, ps, p)) {
      out_hi = p;
      break;
    }
}

}  // namespace

Boundary Boundary::frozen(double v) {
  Boundary b;
  for (int a = 0; a < 3; ++a) {
    b.lower[a] = {BoundaryKind::Frozen, v};
    b.upper[a] = {BoundaryKind::Frozen, v};
  }
  return b;
}

double GridReaction::lipschitz() const noexcept {
  double m = 1.0;
  if (!multiplier.empty()) m = *std::max_element(multiplier.begin(), multiplier.end());
  return m * profile.lipschitz();
}

GridReaction make_grid_reaction(const RandomMedium& m, const GridSpec& g, const Frame& frame) {
  GridReaction r;
  r.profile = m.profile();
  if (m.homogeneous()) return r;
  r.multiplier.resize(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) r.multiplier[n] = m.envelope(frame.map(g.coord(n)));
  return r;
}

GridReaction homogeneous_reaction(const IgnitionProfile& p) {
  GridReaction r;
  r.profile = p;
  return r;
}

double cfl_bound(const GridSpec& g, double lipschitz) {
  return g.h * g.h / (2.0 * g.dim + g.h * g.h * lipschitz);
}

SolverState::SolverState(ScalarField init, GridReaction r, const SolverOptions& opt)
    : field(std::move(init)), reaction(std::move(r)), boundary(opt.boundary), flush_below(opt.flush_below) {
  const auto& g = field.grid;
  if (!reaction.multiplier.empty() && reaction.multiplier.size() != g.size())
    throw ConfigError("solver: reaction multiplier does not match the grid");
  if (!reaction.offset.empty() && reaction.offset.size() != g.size())
    throw ConfigError("solver: reaction offset does not match the grid");
  if (!(opt.safety > 0.0 && opt.safety <= 1.0)) throw ConfigError("solver: safety must lie in (0,1]");
  t = field.t;
  dt_max = cfl_bound(g, reaction.lipschitz());
  dt = opt.dt > 0.0 ? opt.dt : opt.safety * dt_max;
  if (dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "solver: dt = " << dt << " exceeds the CFL bound " << dt_max;
    throw IntegrationError(os.str());
  }
  for (auto& v : field.values) {
    if (!std::isfinite(v)) throw IntegrationError("solver: non-finite initial value");
    v = std::clamp(v, 0.0, 1.0);
  }
  previous = field.values;
  scan_extent(field.values, g, 0, long(g.shape[0]) - 1, extent_lo, extent_hi);
  prev_lo = extent_lo;
  prev_hi = extent_hi;
#if defined(__SSE__)
  _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
#endif
}

SolverState& step(SolverState& s, double dt) {
  if (dt <= 0.0) dt = s.dt;
  if (dt > s.dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step: dt = " << dt << " exceeds the CFL bound " << s.dt_max;
    throw IntegrationError(os.str());
  }
  const auto& g = s.field.grid;
  const long P = long(g.shape[0]);
  const int ax0 = 0;
  const bool lo_free = zero_side(s.boundary.lower[ax0]);
  const bool hi_free = zero_side(s.boundary.upper[ax0]);

  long lo = 0, hi = P - 1;
  if (s.extent_lo > s.extent_hi) {
    // all zero: only nonzero ghosts can change anything
    if (lo_free && hi_free) lo = 0, hi = -1;
  } else {
    if (lo_free) lo = std::max(0L, s.extent_lo - 1);
    if (hi_free) hi = std::min(P - 1, s.extent_hi + 1);
  }
  if (s.extent_lo > s.extent_hi && !(lo_free && hi_free)) lo = 0, hi = P - 1;

  std::swap(s.field.values, s.previous);
  std::swap(s.extent_lo, s.prev_lo);
  std::swap(s.extent_hi, s.prev_hi);
  // s.previous holds the current values; s.field.values is the stale buffer
  const double* u = s.previous.data();
  double* out = s.field.values.data();
  const std::size_t ps = plane_size(g);
  // zero stale planes outside the update range
  for (long p = s.extent_lo; p <= s.extent_hi; ++p)
    if (p < lo || p > hi) std::memset(out + std::size_t(p) * ps, 0, ps * sizeof(double));

  Stats st;
  if (lo <= hi) {
    const auto& R = s.reaction;
    auto go = [&](const auto& rate) {
      switch (g.dim) {
        case 1: sweep<1>(g, s.boundary, u, out, dt, rate, s.flush_below, lo, hi, st); break;
        case 2: sweep<2>(g, s.boundary, u, out, dt, rate, s.flush_below, lo, hi, st); break;
        default: sweep<3>(g, s.boundary, u, out, dt, rate, s.flush_below, lo, hi, st); break;
      }
    };
    if (!R.offset.empty())
      go(FullRate{R});
    else if (!R.multiplier.empty())
      go(MulRate{R.profile, R.multiplier.data()});
    else
      go(HomRate{R.profile});
  }
  if (st.bad >= 0) {
    const Point p = g.coord(std::size_t(st.bad));
    std::ostringstream os;
    os << "step: non-finite value at grid index " << st.bad << " (x = " << p[0] << ", " << p[1] << ", " << p[2]
       << "), t = " << s.t;
    throw IntegrationError(os.str());
  }
  if (lo <= hi)
    scan_extent(s.field.values, g, lo, hi, s.extent_lo, s.extent_hi);
  else
    s.extent_lo = 0, s.extent_hi = -1;
  s.active_lo = lo;
  s.active_hi = hi;
  s.clamp_total += st.clamp;
  s.clamp_events += st.events;
  s.t += dt;
  s.last_dt = dt;
  ++s.step_count;
  return s;
}

RunSummary run(SolverState& s, double t_end, const std::vector<Observer*>& observers) {
  if (!(t_end >= s.t)) throw ConfigError("run: t_end precedes the current time");
  const auto wall0 = std::chrono::steady_clock::now();
  RunSummary sum;
  sum.t_start = s.t;
  sum.dt = s.dt;
  const std::size_t steps0 = s.step_count;
  s.field.t = s.t;
  for (auto* o : observers) o->start(s);
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
  while (s.t < t_end - eps) {
    double target = t_end;
    for (auto* o : observers) target = std::min(target, o->next_event(s.t));
    double dt = s.dt;
    bool land = false;
    if (s.t + dt >= target - eps) {
      dt = target - s.t;
      land = true;
    }
    if (dt <= 0.0) {
      s.t = target;
      s.field.t = s.t;
      for (auto* o : observers) o->after_step(s);
      continue;
    }
    step(s, dt);
    if (land) s.t = target;
    s.field.t = s.t;
    for (auto* o : observers) o->after_step(s);
    if (std::any_of(observers.begin(), observers.end(), [](const Observer* o) { return o->stop_requested(); })) break;
  }
  for (auto* o : observers) o->finish(s);
  sum.t_end = s.t;
  sum.steps = s.step_count - steps0;
  sum.clamp_total = s.clamp_total;
  sum.clamp_warning = s.clamp_total > 1e-8 * double(s.field.values.size());
  if (sum.clamp_warning)
    log_warn("run: clamp total " + std::to_string(s.clamp_total) + " exceeds 1e-8 N, dt may be too large");
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return sum;
}

void ProbeObserver::start(const SolverState& s) {
  times_.assign(points_.size(), kInf);
  pending_ = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i] >= s.field.values.size()) throw ConfigError("probe observer: point outside the grid");
    if (s.field.values[points_[i]] >= threshold_)
      times_[i] = s.t;
    else
      ++pending_;
  }
}

void ProbeObserver::after_step(const SolverState& s) {
  if (pending_ == 0) return;
  const double t0 = s.t - s.last_dt;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (times_[i] < kInf) continue;
    const double v = s.field.values[points_[i]];
    if (v < threshold_) continue;
    const double old = s.previous.empty() ? v : s.previous[points_[i]];
    double t = s.t;
    if (v > old) t = t0 + s.last_dt * std::clamp((threshold_ - old) / (v - old), 0.0, 1.0);
    times_[i] = t;
    --pending_;
  }
}

void ArrivalObserver::start(const SolverState& s) {
  map_.grid = s.field.grid;
  map_.threshold = threshold_;
  map_.interpolated = interp_;
  map_.times.assign(s.field.values.size(), kInf);
  pending_ = 0;
  for (std::size_t n = 0; n < s.field.values.size(); ++n) {
    if (s.field.values[n] >= threshold_)
      map_.times[n] = s.t;
    else
      ++pending_;
  }
}

void ArrivalObserver::after_step(const SolverState& s) {
  if (pending_ == 0 || s.active_lo > s.active_hi) return;
  const std::size_t ps = s.field.values.size() / s.field.grid.shape[0];
  const std::size_t n0 = std::size_t(s.active_lo) * ps, n1 = std::size_t(s.active_hi + 1) * ps;
  const double t0 = s.t - s.last_dt;
  for (std::size_t n = n0; n < n1; ++n) {
    const double v = s.field.values[n];
    if (v < threshold_ || map_.times[n] < kInf) continue;
    const double old = s.previous[n];
    double t = s.t;
    if (interp_ && v > old) t = t0 + s.last_dt * std::clamp((threshold_ - old) / (v - old), 0.0, 1.0);
    map_.times[n] = t;
    --pending_;
  }
}

ArrivalTimeMap arrival_times(const ArrivalObserver& obs) { return obs.map(); }

void SnapshotObserver::start(const SolverState& s) {
  snaps_.clear();
  for (double t : times_)
    if (std::abs(t - s.t) <= 1e-12 * std::max(1.0, std::abs(t))) snaps_.push_back(s.field);
}

void SnapshotObserver::after_step(const SolverState& s) {
  for (double t : times_)
    if (std::abs(t - s.t) <= 1e-12 * std::max(1.0, std::abs(t))) snaps_.push_back(s.field);
}

double SnapshotObserver::next_event(double t) const {
  double best = kInf;
  for (double x : times_)
    if (x > t + 1e-12 * std::max(1.0, std::abs(x))) best = std::min(best, x);
  return best;
}

void WidthObserver::record(const SolverState& s) {
  for (double eta : etas_) samples_.push_back({s.t, eta, transition_width(s.field, eta, theta_)});
}

void WidthObserver::start(const SolverState& s) {
  samples_.clear();
  for (double t : times_)
    if (std::abs(t - s.t) <= 1e-12 * std::max(1.0, std::abs(t))) record(s);
}

void WidthObserver::after_step(const SolverState& s) {
  for (double t : times_)
    if (std::abs(t - s.t) <= 1e-12 * std::max(1.0, std::abs(t))) record(s);
}

double WidthObserver::next_event(double t) const {
  double best = kInf;
  for (double x : times_)
    if (x > t + 1e-12 * std::max(1.0, std::abs(x))) best = std::min(best, x);
  return best;
}

void TimeDerivativeObserver::after_step(const SolverState& s) {
  if (s.last_dt <= 0.0) return;
  const std::size_t N = s.field.values.size();
  const std::size_t ps = N / s.field.grid.shape[0];
  if (s.active_lo > s.active_hi || s.active_lo > 0 || std::size_t(s.active_hi + 1) * ps < N)
    min_all_ = std::min(min_all_, 0.0);
  if (s.active_lo > s.active_hi) return;
  const std::size_t n0 = std::size_t(s.active_lo) * ps, n1 = std::size_t(s.active_hi + 1) * ps;
  const double inv = 1.0 / s.last_dt;
  const bool band = s.t - s.last_dt >= from_;
  for (std::size_t n = n0; n < n1; ++n) {
    const double old = s.previous[n];
    const double d = (s.field.values[n] - old) * inv;
    min_all_ = std::min(min_all_, d);
    if (band && old >= lo_ && old <= hi_) min_band_ = std::min(min_band_, d);
  }
}

double transition_width(const ScalarField& f, double eta, double theta) {
  if (!(eta > 0.0 && eta < theta && theta < 1.0))
    throw ConfigError("transition_width: need 0 < eta < theta < 1");
  Mask upper(f.values.size()), lower(f.values.size());
  bool any_lower = false, any_upper = false;
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    upper[n] = f.values[n] >= theta;
    lower[n] = f.values[n] >= eta;
    any_lower = any_lower || lower[n];
    any_upper = any_upper || upper[n];
  }
  if (!any_lower) return 0.0;
  if (!any_upper) return kInf;
  const auto d = distance_to_mask(f.grid, upper);
  double L = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n)
    if (lower[n]) L = std::max(L, d[n]);
  return L;
}

Mask reached_set(const ScalarField& f, double theta) {
  Mask m(f.values.size());
  for (std::size_t n = 0; n < m.size(); ++n) m[n] = f.values[n] >= theta;
  return m;
}

}  // namespace frontlab
