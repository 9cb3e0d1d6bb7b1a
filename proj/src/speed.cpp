#include "frontlab/speed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "frontlab/ensemble.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/log.hpp"
#include "frontlab/solver.hpp"

namespace frontlab {

namespace {

// Phase-plane shot in the variable U: dP/dU = -c - F0(U)/P, P = U'. Below theta0 the front is
// exactly U = A exp(-c x), so P = -c U there. Positive return: c too small.
double shoot(const IgnitionProfile& p, double c) {
  using State = std::array<double, 1>;
  boost::numeric::odeint::runge_kutta4<State> rk;
  const double u0 = p.theta0();
  const double u_end = 1.0 - 1e-4;
  const int n = 40000;
  const double du = (u_end - u0) / n;
  auto rhs = [&](const State& x, State& dx, double u) { dx[0] = -c - p(u) / x[0]; };
  State P{-c * u0};
  double U = u0;
  for (int i = 0; i < n; ++i) {
    rk.do_step(rhs, P, U, du);
    U += du;
    if (!(P[0] < -1e-300)) return 1.0;
  }
  // slow manifold P ~ -F0(U)/c near the degenerate state U = 1
  return P[0] + p(U) / c;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const std::size_t i = std::size_t(std::floor(pos));
  const double w = pos - double(i);
  return i + 1 < v.size() ? (1 - w) * v[i] + w * v[i + 1] : v[i];
}

// Ordinary least squares y = a + b x.
std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxx > 0.0 ? sxy / sxx : 0.0;
  return {my - b * mx, b};
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, int reps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<std::size_t>> out(std::size_t(std::max(reps, 0)), std::vector<std::size_t>(n));
  for (auto& r : out)
    for (auto& i : r) i = pick(rng);
  return out;
}

std::vector<double> probe_means(const HalfspaceEnsemble& ens, const std::vector<std::size_t>& idx) {
  std::vector<double> m(ens.probes.size(), 0.0);
  for (std::size_t k : idx)
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += ens.members[k].T[j];
  for (auto& x : m) x /= double(idx.size());
  return m;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::size_t probe_index(const std::vector<double>& probes, double l) {
  for (std::size_t j = 0; j < probes.size(); ++j)
    if (std::abs(probes[j] - l) < 1e-9) return j;
  std::ostringstream os;
  os << "probe distance " << l << " is not in the ensemble probe list";
  throw ConfigError(os.str());
}

double fit_gamma(const EnsembleSpec& spec) {
  return 0.5 * (1.0 - HypothesisParams::from_profile(spec.medium.profile, spec.medium.dim).beta1());
}

// T(l)/l = Tbar + K/l + A l^-gamma. K absorbs the fixed entry lag of the step datum (the
// threshold level forms behind the leading edge); with only two probes A is dropped.
std::pair<double, double> fit_tbar(const std::vector<double>& probes, const std::vector<double>& means, double gamma) {
  const std::size_t n = probes.size();
  if (n == 1) return {means[0] / probes[0], 0.0};
  const int cols = n >= 3 ? 3 : 2;
  Eigen::MatrixXd X(n, cols);
  Eigen::VectorXd y(n);
  for (std::size_t j = 0; j < n; ++j) {
    X(j, 0) = 1.0;
    X(j, 1) = 1.0 / probes[j];
    if (cols == 3) X(j, 2) = std::pow(probes[j], -gamma);
    y(j) = means[j] / probes[j];
  }
  const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
  return {b(0), cols == 3 ? b(2) : 0.0};
}

double bilinear(const ScalarField& f, double x, double y) {
  const auto& g = f.grid;
  const double fx = (x - g.origin[0]) / g.h, fy = (y - g.origin[1]) / g.h;
  if (fx < 0 || fy < 0 || fx > double(g.shape[0] - 1) || fy > double(g.shape[1] - 1)) return 0.0;
  const std::size_t i = std::min(std::size_t(fx), g.shape[0] - 2), j = std::min(std::size_t(fy), g.shape[1] - 2);
  const double a = fx - double(i), b = fy - double(j);
  return (1 - a) * (1 - b) * f[g.index(i, j)] + a * (1 - b) * f[g.index(i + 1, j)] + (1 - a) * b * f[g.index(i, j + 1)] +
         a * b * f[g.index(i + 1, j + 1)];
}

}  // namespace

double compute_c0(const IgnitionProfile& p, double tol) {
  double lo = 1e-8, hi = 2.0 * std::sqrt(p.lipschitz());
  if (shoot(p, hi) > 0.0 || shoot(p, lo) <= 0.0)
    throw NumericError("compute_c0: no bisection bracket in (0, 2 sqrt(M)); check the ignition profile");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (shoot(p, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double EnsembleSpec::threshold() const {
  const double ts = theta_star > 0.0 ? theta_star : medium.profile.theta1() / 4.0;
  return 1.0 - ts;
}

void EnsembleSpec::validate() const {
  if (seeds.empty()) throw ConfigError("ensemble: no seeds");
  auto s = seeds;
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("ensemble: seeds must be pairwise distinct");
  if (probes.empty()) throw ConfigError("ensemble: no probes");
  for (double l : probes)
    if (!(l > 0.0)) throw ConfigError("ensemble: probe distances must be positive");
  if (!(h > 0.0)) throw ConfigError("ensemble: h must be positive");
  if (medium.dim > 1 && transverse < 8.0) throw ConfigError("ensemble: transverse period must be >= 8 lattice cells");
}

double dependence_range(const MediumSpec& m) {
  if (m.range) return 2.0 * *m.range;
  double s = m.g.support(m.a_map.kind == AmplitudeMap::Kind::IndexPower ? m.a_map.j_max : 1) * m.g.max_stretch();
  if (!std::isfinite(s)) s = RandomMedium(m).window_radius();
  return 2.0 * s;
}

HalfspaceEnsemble run_halfspace_ensemble(const EnsembleSpec& spec, const Point& e_in) {
  spec.validate();
  const int d = spec.medium.dim;
  Point e = e_in;
  double en = 0.0;
  for (int a = 0; a < d; ++a) en += e[a] * e[a];
  en = std::sqrt(en);
  if (!(en > 0.0)) throw ConfigError("ensemble: zero direction");
  for (auto& c : e) c /= en;
  Frame frame = Frame::aligned(e, d);
  if (d == 1) frame.axes[0] = {e[0] >= 0 ? 1.0 : -1.0, 0.0, 0.0};

  const double lmax = *std::max_element(spec.probes.begin(), spec.probes.end());
  const double q = spec.threshold();
  // The threshold level trails the mid level of the wave by c0 int du / F0, and the
  // Frozen far end must stay clear of the leading edge until the last probe is reached.
  const auto& prof = spec.medium.profile;
  const double c0 = compute_c0(prof);
  double lag = 0.0;
  {
    const double u0 = std::max(0.5, prof.join()), du = (q - u0) / 2000.0;
    for (int i = 0; i < 2000; ++i) lag += du / prof(u0 + (i + 0.5) * du);
    lag *= c0;
  }
  GridSpec g;
  g.dim = d;
  g.h = spec.h;
  g.shape[0] = std::size_t(std::ceil((spec.back + lmax + lag + spec.ahead) / spec.h)) + 1;
  g.origin[0] = -spec.back;
  for (int a = 1; a < d; ++a) g.shape[a] = std::max<std::size_t>(1, std::size_t(std::llround(spec.transverse / spec.h)));

  // probe l sits between nodes i and i+1 along axis 0 at transverse index 0
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
  for (double l : spec.probes) {
    const double f = (l + spec.back) / spec.h;
    std::size_t i = std::size_t(std::floor(f + 1e-9));
    double w = f - double(i);
    if (w < 1e-9) w = 0.0;
    nodes.push_back(g.index(i));
    nodes.push_back(g.index(std::min(i + 1, g.shape[0] - 1)));
    weights.push_back(w);
  }

  double t_end = spec.t_end;
  if (!(t_end > 0.0)) t_end = 1.5 * (lmax + spec.back + lag) / c0 + 20.0;

  HalfspaceEnsemble ens;
  ens.e = e;
  ens.probes = spec.probes;
  ens.members.resize(spec.seeds.size());
  const RandomMedium base(spec.medium);
  parallel_for(spec.seeds.size(), spec.workers, [&](std::size_t k) {
    const auto wall0 = std::chrono::steady_clock::now();
    const auto medium = base.with_seed(spec.seeds[k]);
    ScalarField f(g, 0.0);
    for (std::size_t n = 0; n < g.size(); ++n)
      if (g.coord(n)[0] <= 0.0) f[n] = q;
    SolverOptions opt;
    opt.boundary.lower[0] = {BoundaryKind::Neumann, 0.0};
    opt.boundary.upper[0] = {BoundaryKind::Frozen, 0.0};
    for (int a = 1; a < d; ++a) opt.boundary.lower[a] = opt.boundary.upper[a] = {BoundaryKind::Periodic, 0.0};
    SolverState s(std::move(f), make_grid_reaction(medium, g, frame), opt);
    ProbeObserver probe(nodes, q);
    run(s, t_end, {&probe});
    auto& rec = ens.members[k];
    rec.seed = spec.seeds[k];
    rec.steps = s.step_count;
    rec.window_clipped = medium.window_clipped();
    for (std::size_t j = 0; j < spec.probes.size(); ++j) {
      const double a = probe.times()[2 * j], b = probe.times()[2 * j + 1];
      const double w = weights[j];
      rec.T.push_back(w == 0.0 ? a : (1 - w) * a + w * b);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  });

  std::ostringstream bad;
  for (const auto& m : ens.members)
    if (std::any_of(m.T.begin(), m.T.end(), [](double t) { return !std::isfinite(t); })) bad << ' ' << m.seed;
  if (!bad.str().empty())
    throw NumericError("ensemble: probes unreached by t_end = " + std::to_string(t_end) + " for seeds" + bad.str() +
                       " (increase t_end)");
  return ens;
}

SpeedRow fit_front_speed(const HalfspaceEnsemble& ens, const EnsembleSpec& spec) {
  SpeedRow row;
  row.e = ens.e;
  row.gamma = fit_gamma(spec);
  row.l_min = *std::min_element(ens.probes.begin(), ens.probes.end());
  row.l_max = *std::max_element(ens.probes.begin(), ens.probes.end());
  const auto idx = all_indices(ens.members.size());
  const auto means = probe_means(ens, idx);
  row.mean_T = means;
  for (std::size_t j = 0; j < ens.probes.size(); ++j) {
    std::vector<double> t;
    for (const auto& m : ens.members) t.push_back(m.T[j]);
    row.sd_T.push_back(sd_of(t));
  }
  const auto [tbar, amp] = fit_tbar(ens.probes, means, row.gamma);
  if (!(tbar > 0.0)) throw NumericError("front speed: non-positive extrapolated Tbar; probes too short");
  row.tbar = tbar;
  row.amplitude = amp;
  row.c_star = 1.0 / tbar;
  std::vector<double> boot;
  for (const auto& r : bootstrap_indices(ens.members.size(), spec.bootstrap, spec.bootstrap_seed)) {
    const double tb = fit_tbar(ens.probes, probe_means(ens, r), row.gamma).first;
    if (tb > 0.0) boot.push_back(1.0 / tb);
  }
  if (boot.size() >= 2) {
    row.stderr_c = sd_of(boot);
    row.ci_lo = quantile(boot, 0.025);
    row.ci_hi = quantile(boot, 0.975);
  } else {
    row.ci_lo = row.ci_hi = row.c_star;
  }
  return row;
}

SpeedRow estimate_front_speed(const EnsembleSpec& spec, const Point& e) {
  if (spec.seeds.size() < 8) throw ConfigError("front speed: need at least 8 seeds");
  const double lo = *std::min_element(spec.probes.begin(), spec.probes.end());
  const double hi = *std::max_element(spec.probes.begin(), spec.probes.end());
  if (spec.probes.size() < 2 || hi < 4.0 * lo)
    throw ConfigError("front speed: need at least 2 probe offsets spanning a factor of 4");
  return fit_front_speed(run_halfspace_ensemble(spec, e), spec);
}

SpeedTable speed_table(const std::vector<SpeedRow>& rows, int dim) {
  SpeedTable t;
  t.dim = dim;
  for (const auto& r : rows) {
    t.add(r.e, r.c_star, r.stderr_c);
    t.tbar.back() = r.tbar;
    t.l_min = r.l_min;
    t.l_max = r.l_max;
  }
  return t;
}

LinearityReport mean_linearity(const HalfspaceEnsemble& ens, const std::vector<std::array<double, 2>>& pairs,
                               const EnsembleSpec& spec) {
  if (pairs.empty()) throw ConfigError("mean linearity: need at least one (l, m, l + m) triple");
  struct Tri {
    std::size_t l, m, s;
  };
  std::vector<Tri> tri;
  for (const auto& p : pairs)
    tri.push_back({probe_index(ens.probes, p[0]), probe_index(ens.probes, p[1]), probe_index(ens.probes, p[0] + p[1])});
  auto defects = [&](const std::vector<double>& m) {
    std::vector<double> D;
    for (const auto& t : tri) D.push_back(std::abs(m[t.s] - m[t.l] - m[t.m]));
    return D;
  };
  auto exponent = [&](const std::vector<double>& D) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < tri.size(); ++i) {
      x.push_back(std::log(pairs[i][0] + pairs[i][1]));
      y.push_back(std::log(std::max(D[i], 1e-12)));
    }
    return ols(x, y).second;
  };
  LinearityReport rep;
  const auto D = defects(probe_means(ens, all_indices(ens.members.size())));
  std::vector<std::vector<double>> bootD(tri.size());
  std::vector<double> bootE;
  for (const auto& r : bootstrap_indices(ens.members.size(), spec.bootstrap, spec.bootstrap_seed)) {
    const auto b = defects(probe_means(ens, r));
    for (std::size_t i = 0; i < tri.size(); ++i) bootD[i].push_back(b[i]);
    if (tri.size() >= 2) bootE.push_back(exponent(b));
  }
  for (std::size_t i = 0; i < tri.size(); ++i)
    rep.rows.push_back({pairs[i][0], pairs[i][1], D[i], bootD[i].size() >= 2 ? sd_of(bootD[i]) : 0.0});
  if (tri.size() >= 2) {
    rep.exponent = exponent(D);
    rep.ci_lo = bootE.size() >= 2 ? quantile(bootE, 0.025) : rep.exponent;
    rep.ci_hi = bootE.size() >= 2 ? quantile(bootE, 0.975) : rep.exponent;
  }
  return rep;
}

LinearityReport mean_linearity(const EnsembleSpec& spec, const Point& e, const std::vector<double>& l_list) {
  std::vector<std::array<double, 2>> pairs;
  auto in = [&](double x) { return std::any_of(l_list.begin(), l_list.end(), [&](double y) { return std::abs(x - y) < 1e-9; }); };
  for (std::size_t i = 0; i < l_list.size(); ++i)
    for (std::size_t j = i; j < l_list.size(); ++j)
      if (in(l_list[i] + l_list[j])) pairs.push_back({l_list[i], l_list[j]});
  if (pairs.empty()) throw ConfigError("mean linearity: l_list is not closed under any (l, m, l + m) triple");
  EnsembleSpec s = spec;
  s.probes = l_list;
  return mean_linearity(run_halfspace_ensemble(s, e), pairs, s);
}

FluctuationReport fluctuation_stats(const HalfspaceEnsemble& ens, const EnsembleSpec& spec) {
  if (ens.members.size() < kMinFluctuationSeeds)
    throw ConfigError("fluctuation stats: need at least " + std::to_string(kMinFluctuationSeeds) + " seeds, got " +
                      std::to_string(ens.members.size()));
  FluctuationReport rep;
  rep.rho = dependence_range(spec.medium);
  rep.beta1 = HypothesisParams::from_profile(spec.medium.profile, spec.medium.dim).beta1();
  const std::size_t nd = ens.probes.size();
  for (std::size_t j = 0; j < nd; ++j) {
    std::vector<double> t;
    for (const auto& m : ens.members) t.push_back(m.T[j]);
    DistanceStats st;
    st.distance = ens.probes[j];
    st.mean = mean_of(t);
    st.sd = sd_of(t);
    const double qs[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (int k = 0; k < 5; ++k) st.quantiles[k] = quantile(t, qs[k]);
    rep.per_distance.push_back(st);
  }
  auto slope = [&](const std::vector<std::size_t>& idx, double* intercept) {
    std::vector<double> x, y;
    for (std::size_t j = 0; j < nd; ++j) {
      std::vector<double> t;
      for (std::size_t k : idx) t.push_back(ens.members[k].T[j]);
      x.push_back(std::log(ens.probes[j]));
      y.push_back(std::log(std::max(sd_of(t), 1e-300)));
    }
    const auto [a, b] = ols(x, y);
    if (intercept) *intercept = a;
    return b;
  };
  const bool degenerate = std::all_of(rep.per_distance.begin(), rep.per_distance.end(), [](const auto& s) { return s.sd < 1e-12; });
  if (degenerate) {
    log_info("fluctuation stats: zero spread at every distance (deterministic medium)");
  } else {
    double a = 0.0;
    rep.exponent = slope(all_indices(ens.members.size()), &a);
    rep.prefactor = std::exp(a);
    for (std::size_t j = 0; j < nd; ++j)
      rep.fit_residuals.push_back(std::log(rep.per_distance[j].sd) - (a + rep.exponent * std::log(ens.probes[j])));
    std::vector<double> boot;
    for (const auto& r : bootstrap_indices(ens.members.size(), spec.bootstrap, spec.bootstrap_seed)) {
      const double b = slope(r, nullptr);
      if (std::isfinite(b)) boot.push_back(b);
    }
    rep.ci_lo = quantile(boot, 0.025);
    rep.ci_hi = quantile(boot, 0.975);

    // tail envelope P(|T - mean| >= lambda) <= 2 exp(-lambda^2 / (C (1+D)(rho + D^beta1))),
    // fitted on lambda above the empirical 60th percentile
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < nd; ++j) {
      const double D = ens.probes[j];
      std::vector<double> dev;
      for (const auto& m : ens.members) dev.push_back(std::abs(m.T[j] - rep.per_distance[j].mean));
      std::sort(dev.begin(), dev.end());
      const double cut = quantile(dev, 0.6);
      const double S = (1.0 + D) * (rep.rho + std::pow(D, rep.beta1));
      for (std::size_t k = 0; k < dev.size(); ++k) {
        const double lam = dev[k];
        if (lam <= cut || lam <= 0.0) continue;
        const double P = double(dev.size() - k) / double(dev.size());
        const double y = -std::log(P / 2.0);
        if (y <= 0.0) continue;
        xs.push_back(lam * lam / S);
        ys.push_back(y);
      }
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += xs[i] * ys[i];
      sxx += xs[i] * xs[i];
    }
    if (sxy > 0.0) {
      rep.tail_C = sxx / sxy;
      double r2 = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = xs[i] / rep.tail_C;
        r2 += std::pow(std::log(ys[i]) - std::log(pred), 2);
      }
      rep.tail_rms = std::sqrt(r2 / double(xs.size()));
    }
  }
  return rep;
}

FluctuationReport fluctuation_stats(const EnsembleSpec& spec, const Point& e) {
  if (spec.seeds.size() < kMinFluctuationSeeds)
    throw ConfigError("fluctuation stats: need at least " + std::to_string(kMinFluctuationSeeds) + " seeds, got " +
                      std::to_string(spec.seeds.size()));
  std::vector<double> d = spec.probes;
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  if (d.size() < 4 || d.back() < 4.0 * d.front())
    throw ConfigError("fluctuation stats: need probes at >= 4 distances spanning a factor >= 4");
  return fluctuation_stats(run_halfspace_ensemble(spec, e), spec);
}

WulffEstimate wulff_from_field(const ScalarField& f, double threshold, const Point& center, double t,
                               std::size_t angles) {
  if (f.grid.dim != 2) throw ConfigError("wulff estimate: 2D fields only");
  WulffEstimate w;
  w.t = t;
  const auto& g = f.grid;
  const auto up = g.upper();
  const double rmax = std::hypot(up[0] - g.origin[0], up[1] - g.origin[1]);
  const double dr = g.h / 4.0;
  for (std::size_t k = 0; k < angles; ++k) {
    const double a = 2.0 * std::numbers::pi * double(k) / double(angles);
    const double c = std::cos(a), s = std::sin(a);
    auto val = [&](double r) { return bilinear(f, center[0] + r * c, center[1] + r * s); };
    double last = 0.0;
    for (double r = 0.0; r <= rmax; r += dr)
      if (val(r) >= threshold) last = r;
    double lo = last, hi = last + dr;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (val(mid) >= threshold ? lo : hi) = mid;
    }
    w.angle.push_back(a);
    w.radius.push_back(lo / t);
    w.boundary.v.push_back({lo / t * c, lo / t * s});
  }
  for (std::size_t k = 0; k < angles; ++k) {
    const Point e{std::cos(w.angle[k]), std::sin(w.angle[k]), 0.0};
    w.directions.push_back(e);
    w.support.push_back(polygon_support(w.boundary, {e[0], e[1]}));
  }
  return w;
}

WulffEstimate estimate_wulff(const WulffSpec& spec) {
  if (spec.medium.dim != 2) throw ConfigError("wulff estimate: 2D runs only");
  const RandomMedium m = RandomMedium(spec.medium).with_seed(spec.seed);
  const double c1 = 2.0 * std::sqrt(spec.medium.profile.lipschitz() * m.envelope_bound() * 2.0);
  const double D = spec.domain > 0.0 ? spec.domain : spec.source_radius + c1 * spec.t_end + 4.0;
  const GridSpec g = GridSpec::covering(2, {-D, -D, 0}, {D, D, 0}, spec.h);
  const double q = 1.0 - (spec.theta_star > 0.0 ? spec.theta_star : spec.medium.profile.theta1() / 4.0);
  ScalarField f(g, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto p = g.coord(n);
    if (std::hypot(p[0], p[1]) <= spec.source_radius) f[n] = q;
  }
  SolverState s(std::move(f), make_grid_reaction(m, g), {});
  run(s, spec.t_end);
  const double margin = 2.0 * g.h;
  const auto up = g.upper();
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (s.field[n] < q) continue;
    const auto p = g.coord(n);
    if (p[0] - g.origin[0] < margin || up[0] - p[0] < margin || p[1] - g.origin[1] < margin || up[1] - p[1] < margin)
      throw NumericError("wulff estimate: reached set touches the domain margin (enlarge the domain)");
  }
  return wulff_from_field(s.field, q, {0, 0, 0}, spec.t_end, spec.angles);
}

}  // namespace frontlab
