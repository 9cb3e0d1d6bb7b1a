#include "frontlab/homog.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "frontlab/ensemble.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/init_data.hpp"
#include "frontlab/log.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/speed.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double norm(const Point& p, int d) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += p[a] * p[a];
  return std::sqrt(s);
}

// x -> x / eps + shift, after moving every face inward by psi.
SetDescriptor micro_set(const SetDescriptor& A, double eps, double psi, const Point& shift, int d) {
  auto map = [&](Point p) {
    for (int a = 0; a < d; ++a) p[a] = p[a] / eps + shift[a];
    return p;
  };
  if (const auto* b = std::get_if<Ball>(&A)) {
    if (!(b->radius - psi > 0.0)) throw ConfigError("homogenization: psi margin empties the ball");
    return Ball{map(b->center), (b->radius - psi) / eps};
  }
  if (const auto* bx = std::get_if<Box>(&A)) {
    Box o;
    for (int a = 0; a < d; ++a) {
      o.lo[a] = (bx->lo[a] + psi) / eps + shift[a];
      o.hi[a] = (bx->hi[a] - psi) / eps + shift[a];
      if (!(o.hi[a] > o.lo[a])) throw ConfigError("homogenization: psi margin empties the box");
    }
    return o;
  }
  if (const auto* pt = std::get_if<Polytope>(&A)) {
    Polytope o;
    for (const auto& f : pt->faces) {
      const double nn = norm(f.normal, d);
      double sh = 0.0;
      for (int a = 0; a < d; ++a) sh += f.normal[a] * shift[a];
      o.faces.push_back({f.normal, (f.offset - psi * nn) / eps + sh});
    }
    return o;
  }
  throw ConfigError("homogenization: A must be a ball, box or polytope");
}

double set_radius(const SetDescriptor& A, int d) {
  if (const auto* b = std::get_if<Ball>(&A)) return norm(b->center, d) + b->radius;
  if (const auto* bx = std::get_if<Box>(&A)) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += std::pow(std::max(std::abs(bx->lo[a]), std::abs(bx->hi[a])), 2);
    return std::sqrt(s);
  }
  if (d == 2 && std::holds_alternative<Polytope>(A)) {
    double r = 0.0;
    for (const auto& v : to_polygon(A).v) r = std::max(r, std::hypot(v[0], v[1]));
    return r;
  }
  throw ConfigError("homogenization: cannot bound A");
}

// Half-space runs along the first axis: [-back, front] x periodic transverse period.
GridSpec slab_grid(int d, double back, double front, double h, double transverse) {
  GridSpec g;
  g.dim = d;
  g.h = h;
  g.origin[0] = -back;
  g.shape[0] = std::size_t(std::ceil((back + front) / h)) + 1;
  for (int a = 1; a < d; ++a) g.shape[a] = std::max<std::size_t>(1, std::size_t(std::llround(transverse / h)));
  return g;
}

SolverOptions slab_options(int d, double far_value) {
  SolverOptions o;
  o.boundary.lower[0] = {BoundaryKind::Neumann, 0.0};
  o.boundary.upper[0] = {BoundaryKind::Frozen, far_value};
  for (int a = 1; a < d; ++a) o.boundary.lower[a] = o.boundary.upper[a] = {BoundaryKind::Periodic, 0.0};
  return o;
}

double default_theta_star(const IgnitionProfile& p, double ts) { return ts > 0.0 ? ts : p.theta1() / 4.0; }

// sup of w over {c t + lo t <= x0 <= c t + hi t} at prescribed times
class SlabObserver : public Observer {
 public:
  SlabObserver(std::vector<double> times, double c, double lo, double hi)
      : times_(std::move(times)), c_(c), lo_(lo), hi_(hi), sup_(times_.size(), 0.0) {}
  void after_step(const SolverState& s) override {
    for (std::size_t k = 0; k < times_.size(); ++k)
      if (same_time(s.t, times_[k])) sup_[k] = measure(s);
  }
  double next_event(double t) const override {
    for (double x : times_)
      if (x > t + 1e-12 * std::max(1.0, x)) return x;
    return kInf;
  }
  const std::vector<double>& sup() const { return sup_; }

 private:
  double measure(const SolverState& s) const {
    const auto& g = s.field.grid;
    const double a = (c_ + lo_) * s.t, b = (c_ + hi_) * s.t;
    const std::size_t plane = g.size() / g.shape[0];
    double m = 0.0;
    for (std::size_t i = 0; i < g.shape[0]; ++i) {
      const double x = g.origin[0] + g.h * double(i);
      if (x < a || x > b) continue;
      for (std::size_t k = 0; k < plane; ++k) m = std::max(m, s.field[i * plane + k]);
    }
    return m;
  }
  std::vector<double> times_;
  double c_, lo_, hi_;
  std::vector<double> sup_;
};

// Per-step minimum of u_t over the band, and the overall minimum.
class BandSlopeObserver : public Observer {
 public:
  BandSlopeObserver(double lo, double hi) : lo_(lo), hi_(hi) {}
  void after_step(const SolverState& s) override {
    if (s.last_dt <= 0.0) return;
    const auto& g = s.field.grid;
    const std::size_t plane = g.size() / g.shape[0];
    double band = kInf;
    if (s.active_lo <= s.active_hi) {
      const double inv = 1.0 / s.last_dt;
      for (std::size_t n = std::size_t(s.active_lo) * plane; n < std::size_t(s.active_hi + 1) * plane; ++n) {
        const double ut = (s.field[n] - s.previous[n]) * inv;
        overall_ = std::min(overall_, ut);
        if (s.field[n] >= lo_ && s.field[n] <= hi_) band = std::min(band, ut);
      }
    }
    t_.push_back(s.t);
    band_.push_back(band);
  }
  const std::vector<double>& t() const { return t_; }
  const std::vector<double>& band() const { return band_; }
  double overall() const { return overall_; }

 private:
  double lo_, hi_;
  double overall_ = kInf;
  std::vector<double> t_, band_;
};

// Searched mollifier scale for the 1D half-space datum, cached per (profile, h, theta*).
double datum_scale(const IgnitionProfile& p, double h, double theta_star) {
  static std::mutex mu;
  static std::vector<std::array<double, 7>> cache;  // theta0, M, m1, alpha1, h, theta*, R
  {
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& c : cache)
      if (c[0] == p.theta0() && c[1] == p.lipschitz() && c[2] == p.m1() && c[3] == p.alpha1() && c[4] == h &&
          c[5] == theta_star)
        return c[6];
  }
  DatumOptions opt;
  opt.theta_star = theta_star;
  const double R = minimal_mollifier_scale(p, 1, h, opt);
  std::lock_guard<std::mutex> lock(mu);
  cache.push_back({p.theta0(), p.lipschitz(), p.m1(), p.alpha1(), h, theta_star, R});
  return R;
}

double datum_reach(const IgnitionProfile& p, double h, double theta_star) {
  return (kMollifierN + 0.5 + kMollifierA) * datum_scale(p, h, theta_star);
}

// Mollified half-space datum for {x0 <= 0} on a 1D grid.
InitialDatum halfspace_datum(const IgnitionProfile& p, const GridSpec& g, double theta_star) {
  DatumOptions opt;
  opt.theta_star = theta_star;
  opt.R = datum_scale(p, g.h, theta_star);
  return build_halfspace_datum({1, 0, 0}, 0.0, p, g, {}, opt);
}

}  // namespace

std::vector<ScalarField> rescale(const std::vector<ScalarField>& micro, double eps, const std::vector<double>& t_macro,
                                 std::size_t stride) {
  if (!(eps > 0.0)) throw ConfigError("rescale: epsilon must be positive");
  if (stride == 0) throw ConfigError("rescale: stride must be positive");
  std::vector<ScalarField> out;
  std::ostringstream missing;
  for (double t : t_macro) {
    const ScalarField* hit = nullptr;
    for (const auto& f : micro)
      if (same_time(f.t, t / eps)) hit = &f;
    if (!hit) {
      missing << ' ' << t << " (micro " << t / eps << ')';
      continue;
    }
    const auto& g = hit->grid;
    GridSpec m;
    m.dim = g.dim;
    m.h = eps * g.h * double(stride);
    for (int a = 0; a < g.dim; ++a) {
      m.origin[a] = eps * g.origin[a];
      m.shape[a] = (g.shape[a] - 1) / stride + 1;
    }
    ScalarField f(m);
    f.t = t;
    for (std::size_t n = 0; n < m.size(); ++n) {
      const auto ijk = m.unravel(n);
      f[n] = (*hit)[g.index(ijk[0] * stride, ijk[1] * stride, ijk[2] * stride)];
    }
    out.push_back(std::move(f));
  }
  if (!missing.str().empty()) throw ConfigError("rescale: no snapshot for macro times" + missing.str());
  return out;
}

HomogError homog_error(const ScalarField& u, const ReachabilitySet& theta, double delta) {
  const auto& g = u.grid;
  const Mask in = theta.mask(g);
  Mask out(in.size());
  for (std::size_t n = 0; n < in.size(); ++n) out[n] = !in[n];
  const auto to_in = distance_to_mask(g, in), to_out = distance_to_mask(g, out);
  HomogError e;
  bool any_in = false, any_out = false;
  Mask half(in.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    half[n] = u[n] >= 0.5;
    if (in[n] && to_out[n] > delta) {
      e.interior_sup = std::max(e.interior_sup, std::abs(u[n] - 1.0));
      any_in = true;
    }
    if (!in[n] && to_in[n] > delta) {
      e.exterior_sup = std::max(e.exterior_sup, std::abs(u[n]));
      any_out = true;
    }
  }
  e.symdiff = symmetric_difference(g, half, in);
  e.theta_measure = mask_measure(g, in);
  if (!any_in || !any_out) {
    e.degenerate = true;
    log_warn("homog_error: margin delta leaves an empty interior or exterior region");
  }
  return e;
}

void HomogSpec::validate() const {
  if (seeds.empty()) throw ConfigError("homogenization: no seeds");
  if (epsilons.empty()) throw ConfigError("homogenization: no epsilon values");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw ConfigError("homogenization: epsilon must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("homogenization: epsilon list must strictly decrease");
  }
  if (times.empty()) throw ConfigError("homogenization: no probe times");
  for (double t : times)
    if (!(t > 0.0)) throw ConfigError("homogenization: probe times must be positive");
  if (speed.size() == 0) throw ConfigError("homogenization: empty speed table");
  if (speed.dim != medium.dim) throw ConfigError("homogenization: speed table dimension mismatch");
  if (!(delta >= 0.0)) throw ConfigError("homogenization: negative delta");
}

HomogReport run_homogenization(const HomogSpec& spec) {
  spec.validate();
  const int d = spec.medium.dim;
  const double t_max = *std::max_element(spec.times.begin(), spec.times.end());
  const double reach = set_radius(spec.A, d) + 1.5 * spec.speed.max_speed() * t_max + spec.margin;
  const double amplitude = 1.0 - spec.medium.profile.theta1();
  const RandomMedium base(spec.medium);

  struct Job {
    std::size_t ie, is;
  };
  std::vector<Job> jobs;
  for (std::size_t ie = 0; ie < spec.epsilons.size(); ++ie)
    for (std::size_t is = 0; is < spec.seeds.size(); ++is) jobs.push_back({ie, is});
  const std::size_t nt = spec.times.size();
  std::vector<HomogRow> rows(jobs.size() * nt);

  // Theta_t per epsilon and time, on that epsilon's macro grid
  parallel_for(jobs.size(), spec.workers, [&](std::size_t j) {
    const auto wall0 = std::chrono::steady_clock::now();
    const double eps = spec.epsilons[jobs[j].ie];
    const std::uint64_t seed = spec.seeds[jobs[j].is];
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = -reach / eps + spec.y_shift[a];
      hi[a] = reach / eps + spec.y_shift[a];
    }
    GridSpec g = GridSpec::covering(d, lo, hi, spec.h_micro);
    // snap the origin to the lattice so macro grids of different eps share points
    for (int a = 0; a < d; ++a) g.origin[a] = std::floor(g.origin[a] / spec.h_micro) * spec.h_micro;
    const auto medium = base.with_seed(seed);
    ScalarField init = step_datum(micro_set(spec.A, eps, spec.psi_margin, spec.y_shift, d), g, amplitude);
    SolverState s(std::move(init), make_grid_reaction(medium, g), {});
    std::vector<double> micro_t;
    for (double t : spec.times) micro_t.push_back(t / eps);
    SnapshotObserver snaps(micro_t);
    run(s, t_max / eps, {&snaps});

    const double theta0 = spec.medium.profile.theta0();
    const auto up = g.upper();
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (s.field[n] < theta0) continue;
      const auto p = g.coord(n);
      for (int a = 0; a < d; ++a)
        if (p[a] - g.origin[a] < 2 * g.h || up[a] - p[a] < 2 * g.h)
          throw NumericError("homogenization: front reached the micro domain margin; raise `margin`");
    }
    const auto macro = rescale(snaps.snapshots(), eps, spec.times);
    for (std::size_t k = 0; k < nt; ++k) {
      const auto theta = theta_convex(spec.A, spec.speed, spec.times[k], d);
      auto& row = rows[j * nt + k];
      row.epsilon = eps;
      row.t = spec.times[k];
      row.seed = seed;
      row.error = homog_error(macro[k], theta, spec.delta);
      row.steps = s.step_count;
    }
    const double wall = seconds_since(wall0);
    for (std::size_t k = 0; k < nt; ++k) rows[j * nt + k].wall_seconds = wall;
  });

  HomogReport rep;
  rep.rows = rows;
  for (std::size_t ie = 0; ie < spec.epsilons.size(); ++ie)
    for (std::size_t k = 0; k < nt; ++k) {
      HomogRow w;
      w.epsilon = spec.epsilons[ie];
      w.t = spec.times[k];
      for (const auto& r : rows) {
        if (r.epsilon != w.epsilon || r.t != w.t) continue;
        w.error.interior_sup = std::max(w.error.interior_sup, r.error.interior_sup);
        w.error.exterior_sup = std::max(w.error.exterior_sup, r.error.exterior_sup);
        w.error.symdiff = std::max(w.error.symdiff, r.error.symdiff);
        w.error.theta_measure = r.error.theta_measure;
        w.error.degenerate = w.error.degenerate || r.error.degenerate;
        w.steps = std::max(w.steps, r.steps);
        w.wall_seconds += r.wall_seconds;
      }
      rep.worst.push_back(w);
    }
  return rep;
}

ExclusivityRecord exclusivity_probe(const ExclusivitySpec& spec) {
  const int d = spec.medium.dim;
  int axis = -1, nz = 0;
  for (int a = 0; a < d; ++a)
    if (spec.e[a] != 0.0) {
      axis = a;
      ++nz;
    }
  if (nz != 1 || std::abs(std::abs(spec.e[axis]) - 1.0) > 1e-12)
    throw ConfigError("exclusivity: e must be an axis-aligned unit vector");
  const double ts = default_theta_star(spec.medium.profile, spec.theta_star);
  double a_max = 0.5 * ts;
  if (spec.M_star > 0.0) a_max = std::min(a_max, 0.5 / spec.M_star);
  ExclusivityRecord rec;
  rec.a = spec.a;
  rec.range_enforced = spec.enforce_range;
  if (!(spec.a >= 0.0)) throw ConfigError("exclusivity: a must be non-negative");
  if (spec.a > a_max) {
    std::ostringstream os;
    os << "exclusivity: a = " << spec.a << " exceeds min(theta*, 1/M*)/2 = " << a_max;
    if (spec.enforce_range) throw ConfigError(os.str());
    log_warn(os.str() + " (range check disabled)");
  }
  if (!(spec.margin_hi > spec.margin_lo)) throw ConfigError("exclusivity: margin_hi must exceed margin_lo");
  if (spec.samples == 0 || !(spec.horizon > 0.0)) throw ConfigError("exclusivity: need a positive horizon and samples");

  const double c = spec.c_star > 0.0 ? spec.c_star : compute_c0(spec.medium.profile);
  for (std::size_t k = 1; k <= spec.samples; ++k) rec.times.push_back(spec.horizon * double(k) / double(spec.samples));
  const GridSpec g = slab_grid(d, 8.0, (c + spec.margin_hi) * spec.horizon + 8.0, spec.h, spec.transverse);
  Frame frame = Frame::aligned(spec.e, d);
  if (d == 1) frame.axes[0] = {spec.e[0], 0, 0};

  const RandomMedium base(spec.medium);
  std::vector<std::vector<double>> sups(spec.seeds.size());
  parallel_for(spec.seeds.size(), spec.workers, [&](std::size_t k) {
    const auto m = base.with_seed(spec.seeds[k]);
    ScalarField w(g);
    for (std::size_t n = 0; n < g.size(); ++n) w[n] = g.coord(n)[0] <= 0.0 ? 1.0 : spec.a;
    SolverState s(std::move(w), make_grid_reaction(m, g, frame), slab_options(d, spec.a));
    SlabObserver obs(rec.times, c, spec.margin_lo, spec.margin_hi);
    run(s, spec.horizon, {&obs});
    sups[k] = obs.sup();
  });
  rec.ahead_sup.assign(rec.times.size(), 0.0);
  for (const auto& s : sups)
    for (std::size_t k = 0; k < s.size(); ++k) rec.ahead_sup[k] = std::max(rec.ahead_sup[k], s[k]);
  for (std::size_t k = 0; k < rec.times.size(); ++k)
    if (rec.times[k] >= spec.burn_in) rec.worst_after_burn_in = std::max(rec.worst_after_burn_in, rec.ahead_sup[k]);
  return rec;
}

Constants calibrate(const CalibrationSpec& spec) {
  const auto& p = spec.profile;
  const double ts = default_theta_star(p, spec.theta_star);
  if (spec.probes.size() < 2) throw ConfigError("calibrate: need at least two probes");
  Constants k;
  k.h = spec.h;
  k.t_end = spec.t_end;
  k.c0 = compute_c0(p);
  const double lmax = *std::max_element(spec.probes.begin(), spec.probes.end());

  // the datum's mollified tail reaches R0 past the interface; the run must not feel the far end
  const double R0 = datum_reach(p, spec.h, ts);
  const double front = R0 + lmax + 1.2 * k.c0 * spec.t_end + 16.0;
  const GridSpec g = slab_grid(1, 16.0, front, spec.h, 0.0);
  const InitialDatum datum = halfspace_datum(p, g, ts);

  // 1 - theta* arrivals at l past the interface, theta* arrivals at l past the datum's support
  std::vector<std::size_t> nodes, far;
  for (double l : spec.probes) {
    nodes.push_back(std::size_t(std::llround((l + 16.0) / spec.h)));
    far.push_back(std::size_t(std::llround((R0 + l + 16.0) / spec.h)));
  }
  const std::size_t np = nodes.size();

  SolverState s(datum.field, homogeneous_reaction(p), slab_options(1, 0.0));
  ProbeObserver upper(nodes, 1.0 - ts, false), lower(far, ts, false);
  BandSlopeObserver band(ts, 1.0 - ts);
  run(s, spec.t_end, {&upper, &lower, &band});

  if (band.overall() < -1e-5) {
    std::ostringstream os;
    os << "calibrate: run is not monotone in time (min u_t = " << band.overall() << ")";
    throw NumericError(os.str());
  }
  std::vector<double> x, y;
  for (std::size_t j = 0; j < np; ++j) {
    const double T = upper.times()[j];
    if (!std::isfinite(T)) throw NumericError("calibrate: probe at " + std::to_string(spec.probes[j]) + " unreached; raise t_end");
    x.push_back(spec.probes[j]);
    y.push_back(T - spec.probes[j] / k.c0);
    const double Tl = lower.times()[j];
    if (!std::isfinite(Tl)) throw NumericError("calibrate: leading edge unreached past the datum support; raise t_end");
    k.D2 = std::max(k.D2, (R0 + spec.probes[j]) / (1.0 + Tl));
  }
  // negative means the datum is already ahead of the wave; no catch-up is needed
  k.kappa0 = std::max(std::accumulate(y.begin(), y.end(), 0.0) / double(y.size()), 0.0);
  if (!(k.kappa0 <= spec.t_end / 2)) throw NumericError("calibrate: entry lag exceeds t_end / 2; raise t_end");

  // late-time band slope, then the first time after which the slope never drops below half of it
  const auto& bt = band.t();
  const auto& bm = band.band();
  double late = kInf;
  for (std::size_t i = 0; i < bt.size(); ++i)
    if (bt[i] >= spec.t_end / 2) late = std::min(late, bm[i]);
  if (!(late > 0.0) || !std::isfinite(late)) throw NumericError("calibrate: no positive interface slope at late times");
  std::size_t start = bt.size();
  while (start > 0 && bm[start - 1] >= 0.5 * late) --start;
  k.kappa_star = start == 0 ? 0.0 : bt[start - 1];
  k.mu_star = kInf;
  for (std::size_t i = start; i < bt.size(); ++i) k.mu_star = std::min(k.mu_star, bm[i]);
  k.M_star = (1.0 + p.lipschitz()) / k.mu_star;
  return k;
}

PerturbationReport perturbation_check(const PerturbationSpec& spec) {
  if (spec.seeds.empty()) throw ConfigError("perturbation: no seeds");
  if (!(spec.eta >= 0.0)) throw ConfigError("perturbation: eta must be non-negative");
  const int d = spec.medium.dim;
  const auto& p = spec.medium.profile;
  const double ts = default_theta_star(p, spec.theta_star);

  Constants k = spec.constants;
  if (!(k.M_star > 0.0)) {
    CalibrationSpec cs;
    cs.profile = p;
    cs.h = spec.h;
    cs.theta_star = ts;
    k = calibrate(cs);
  }
  PerturbationReport rep;
  rep.M_star = k.M_star;
  rep.slack = 2.0 * k.kappa_star + k.kappa0;
  const double eta_max = 0.5 * std::min(ts, 1.0 / k.M_star);
  if (spec.eta > eta_max) {
    std::ostringstream os;
    os << "perturbation: eta = " << spec.eta << " exceeds min(theta*, 1/M*)/2 = " << eta_max;
    if (spec.enforce_range) throw ConfigError(os.str());
    log_warn(os.str() + " (range check disabled)");
  }
  const double R0 = datum_reach(p, spec.h, ts);
  const double expected_T = (R0 + spec.y) / k.c0 + k.kappa0;
  const double R_min = k.D2 * (1.0 + expected_T);
  rep.R = spec.R > 0.0 ? spec.R : R_min;
  if (rep.R < R_min * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "perturbation: R = " << rep.R << " is below D2 (1 + expected T) = " << R_min;
    throw ConfigError(os.str());
  }

  const double t_end = 2.0 * expected_T + 20.0;
  const double envelope = RandomMedium(spec.medium).envelope_bound();
  const double front = R0 + spec.y + 2.0 * std::sqrt(envelope) * k.c0 * t_end + 16.0;
  const GridSpec g = slab_grid(d, 16.0, front, spec.h, 8.0);
  InitialDatum datum1 = halfspace_datum(p, slab_grid(1, 16.0, front, spec.h, 0.0), ts);
  ScalarField init(g);
  {
    const std::size_t plane = g.size() / g.shape[0];
    for (std::size_t i = 0; i < g.shape[0]; ++i)
      for (std::size_t q = 0; q < plane; ++q) init[i * plane + q] = datum1.field[i];
  }
  const std::size_t ny = g.index(std::size_t(std::llround((R0 + spec.y + 16.0) / spec.h)));
  const auto hp = HypothesisParams::from_profile(p, d);
  const double lowering = hp.alpha3 * std::pow(spec.eta, hp.m3);

  const RandomMedium base(spec.medium);
  rep.rows.resize(spec.seeds.size());
  parallel_for(spec.seeds.size(), spec.workers, [&](std::size_t i) {
    const auto m = base.with_seed(spec.seeds[i]);
    const GridReaction f1 = make_grid_reaction(m, g);
    SolverState s1(init, f1, slab_options(d, 0.0));
    ProbeObserver pr1({ny}, 1.0 - ts);
    SnapshotObserver at_t0({spec.t0});
    run(s1, t_end, {&pr1, &at_t0});
    if (at_t0.snapshots().empty()) throw NumericError("perturbation: probe reached before t0");
    const ScalarField& u1_t0 = at_t0.snapshots().front();

    GridReaction f2 = f1;
    const Point y{R0 + spec.y, 0, 0};
    if (spec.kind == PerturbationKind::LevelSet) {
      if (f2.multiplier.empty()) f2.multiplier.assign(g.size(), 1.0);
      for (std::size_t n = 0; n < g.size(); ++n) {
        const auto x = g.coord(n);
        if (u1_t0[n] >= 1.0 - spec.eta && std::abs(x[0] - y[0]) <= rep.R) f2.multiplier[n] *= spec.factor;
      }
    } else {
      f2.offset.assign(g.size(), 0.0);
      for (std::size_t n = 0; n < g.size(); ++n)
        if (std::abs(g.coord(n)[0] - y[0]) <= rep.R) f2.offset[n] = -lowering;
    }
    SolverState s2(init, f2, slab_options(d, 0.0));
    ProbeObserver pr2({ny}, 1.0 - ts);
    run(s2, t_end, {&pr2});

    auto& row = rep.rows[i];
    row.seed = spec.seeds[i];
    row.T1 = pr1.times()[0];
    row.T2 = pr2.times()[0];
    if (!std::isfinite(row.T1) || !std::isfinite(row.T2))
      throw NumericError("perturbation: probe unreached by t_end for seed " + std::to_string(row.seed));
    row.bound = (row.T1 - spec.t0 - rep.slack) / (1.0 + k.M_star * spec.eta);
    row.holds = row.T2 >= row.bound;
  });
  rep.all_hold = std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.holds; });
  return rep;
}

}  // namespace frontlab
