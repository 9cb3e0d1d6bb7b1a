// Acceptance runs: one PASS/FAIL line per criterion.
//   acceptance [--criterion N]... [--cache DIR] [--workers N]
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "frontlab/ensemble.hpp"
#include "frontlab/errors.hpp"
#include "frontlab/hj.hpp"
#include "frontlab/homog.hpp"
#include "frontlab/init_data.hpp"
#include "frontlab/io.hpp"
#include "frontlab/solver.hpp"
#include "frontlab/speed.hpp"

using namespace frontlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  fs::path cache;
  int workers = 1;
};

const IgnitionProfile kProfile = IgnitionProfile::make(0.25, 1.0, 2.0, 0.5);

MediumSpec homogeneous(int dim) {
  MediumSpec m;
  m.dim = dim;
  m.profile = kProfile;
  return m;
}

// sup a = 1 (identity map), sup g = 1 (unit hat of radius 2): envelope in [1, 2].
MediumSpec example_medium(int dim) {
  MediumSpec m = homogeneous(dim);
  m.g.kind = Bump::Kind::Hat;
  m.g.amplitude = 1.0;
  m.g.radius = 2.0;
  m.a_map.kind = AmplitudeMap::Kind::Identity;
  return m;
}

std::vector<std::uint64_t> seed_range(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

std::string num(double x, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << x;
  return o.str();
}

// --- 1: c0 by shooting vs the simulated 1D slope
Outcome criterion1(const Env& env) {
  const double c0 = compute_c0(kProfile);
  EnsembleSpec s;
  s.medium = homogeneous(1);
  s.seeds = seed_range(8);
  s.probes = {32, 64, 128, 256};
  s.workers = env.workers;
  const auto row = estimate_front_speed(s, {1, 0, 0});
  const double rel = std::abs(row.c_star - c0) / c0;
  const double c1 = 2.0 * std::sqrt(kProfile.lipschitz());
  return {rel <= 0.02 && c0 < c1 && row.c_star < c1,
          "c0 = " + num(c0, 7) + ", simulated " + num(row.c_star, 7) + ", rel diff " + num(rel) + " (<= 0.02), 2 sqrt M = " +
              num(c1)};
}

// --- 2: initial-datum sandwich and sub-solution defect at h = 0.05
// 5-point Laplacian defect over nodes whose neighbours all lie on the grid.
double interior_defect(const ScalarField& f, std::size_t pad_lo) {
  const auto& g = f.grid;
  const auto st = g.strides();
  const double inv = 1.0 / (g.h * g.h);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    bool inside = true;
    for (int a = 0; a < g.dim; ++a) inside = inside && ijk[a] >= pad_lo && ijk[a] + 1 < g.shape[a];
    if (!inside) continue;
    double lap = 0.0;
    for (int a = 0; a < g.dim; ++a) lap += f[n - st[a]] + f[n + st[a]] - 2.0 * f[n];
    best = std::min(best, lap * inv + kProfile(f[n]));
  }
  return best;
}

Outcome criterion2(const Env&) {
  const double h = 0.05, r = 5.0;
  std::ostringstream d;
  bool ok = true;
  for (int dim : {1, 2}) {
    DatumOptions opt;
    opt.verify = false;
    opt.R = minimal_mollifier_scale(kProfile, dim, h, opt, r);
    const double R0 = (opt.N + 0.5 + opt.mollifier_a) * *opt.R;
    // 1D: the whole line. 2D: the datum is radial, so the quadrant plus one ghost row holds every
    // distinct node; the defect is taken where all four neighbours are real grid nodes.
    const double hi = r + R0 + 4 * h;
    const GridSpec g = dim == 1 ? GridSpec::covering(1, {-hi, 0, 0}, {hi, 0, 0}, h)
                                : GridSpec::covering(2, {-h, -h, 0}, {hi, hi, 0}, h);
    const auto datum = build_initial_datum(Ball{{0, 0, 0}, r}, kProfile, g, opt);
    const double q = 1.0 - datum.theta_star;
    std::size_t lower = 0, upper = 0, range = 0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const Point x = g.coord(n);
      const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
      const double v = datum.field[n];
      if (rho <= r && v != q) ++lower;
      if (rho >= r + datum.R0 && v != 0.0) ++upper;
      if (v < 0.0 || v > q) ++range;
    }
    const double defect = interior_defect(datum.field, 1);
    const bool pass = lower == 0 && upper == 0 && range == 0 && defect >= -1e-6;
    ok = ok && pass;
    d << "d=" << dim << ": R0 " << num(datum.R0) << ", sandwich violations " << lower + upper + range
      << ", min defect " << num(defect) << (pass ? "" : " FAILED") << "; ";
  }
  return {ok, d.str() + "(defect >= -1e-6)"};
}

// --- 3: c*(e) bounds on the 2D random medium
std::string key_name(const std::string& stem) { return stem + ".csv"; }

SpeedTable speed_table_2d(const Env& env, std::vector<SpeedRow>* rows_out) {
  const fs::path cache = env.cache / key_name("speed_table_2d_example");
  EnsembleSpec s;
  s.medium = example_medium(2);
  s.seeds = seed_range(16);
  s.probes = {16, 64};
  s.workers = env.workers;
  std::vector<SpeedRow> rows;
  for (const auto& e : SpeedTable::direction_sample(2, 8)) rows.push_back(estimate_front_speed(s, e));
  const auto t = speed_table(rows, 2);
  if (!env.cache.empty()) {
    fs::create_directories(env.cache);
    write_speed_csv(cache.string(), t);
  }
  if (rows_out) *rows_out = rows;
  return t;
}

SpeedTable cached_speed_table_2d(const Env& env) {
  const fs::path cache = env.cache / key_name("speed_table_2d_example");
  if (!env.cache.empty() && fs::exists(cache)) return read_speed_csv(cache.string(), 2);
  return speed_table_2d(env, nullptr);
}

Outcome criterion3(const Env& env) {
  std::vector<SpeedRow> rows;
  speed_table_2d(env, &rows);
  const double c0 = compute_c0(kProfile);
  const double lo = 0.98 * c0, hi = 1.02 * 2.0 * std::sqrt(2.0 * kProfile.lipschitz());
  bool ok = true;
  std::ostringstream d;
  d << "c* over 8 directions:";
  for (const auto& r : rows) {
    ok = ok && r.c_star >= lo && r.c_star <= hi;
    d << " " << num(r.c_star);
  }
  d << " in [" << num(lo) << ", " << num(hi) << "]";
  return {ok, d.str()};
}

// --- 4: transition widths normalized by 1 + |ln eta|
Outcome criterion4(const Env&) {
  MediumSpec m = example_medium(1);
  m.seed = 0;
  const RandomMedium med(m);
  const double h = 0.25, theta = 1.0 - kProfile.theta1() / 4.0;
  const GridSpec g = GridSpec::covering(1, {-20, 0, 0}, {260, 0, 0}, h);
  SolverOptions so;
  so.boundary = Boundary::frozen();
  so.boundary.lower[0].kind = BoundaryKind::Neumann;
  SolverState st(step_datum(HalfSpace{{1, 0, 0}, 0.0}, g, theta), make_grid_reaction(med, g), so);
  std::vector<double> times;
  for (double t = 20; t <= 200 + 1e-9; t += 5) times.push_back(t);
  const std::vector<double> etas{1e-1, 1e-2, 1e-3};
  WidthObserver obs(etas, theta, times);
  run(st, 200.0, {&obs});
  // Per eta: max of the normalized width over the early and the late half of the window, and the
  // OLS drift over the whole window. A width that keeps growing (as in the d >= 4 counterexamples)
  // would push the late maximum well above the early one; 10% slack covers the medium's fluctuations.
  struct Series {
    double early = 0.0, late = 0.0, st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0, n = 0.0;
  };
  std::map<double, Series> win;
  double lambda = 0.0;
  for (const auto& s : obs.samples()) {
    const double v = s.width / (1.0 + std::abs(std::log(s.eta)));
    lambda = std::max(lambda, v);
    auto& w = win[s.eta];
    double& slot = s.t <= 110.0 ? w.early : w.late;
    slot = std::max(slot, v);
    w.st += s.t, w.sv += v, w.stt += s.t * s.t, w.stv += s.t * v, w.n += 1.0;
  }
  bool ok = std::isfinite(lambda) && obs.samples().size() == etas.size() * times.size();
  std::ostringstream d;
  d << "Lambda_emp = " << num(lambda) << ";";
  for (const auto& [eta, w] : win) {
    const bool flat = w.late <= 1.1 * w.early;
    const double slope = (w.n * w.stv - w.st * w.sv) / (w.n * w.stt - w.st * w.st);
    ok = ok && flat;
    d << " eta " << eta << ": max early " << num(w.early) << " late " << num(w.late) << " drift "
      << num(slope * 180.0) << (flat ? "" : " (grows)") << ";";
  }
  d << " late max <= 1.1 early max";
  return {ok, d.str()};
}

// --- 5, 6: one 1D ensemble, cached so the two criteria share it
HalfspaceEnsemble ensemble_1d(const Env& env, EnsembleSpec& s) {
  s.medium = example_medium(1);
  s.seeds = seed_range(64);
  s.probes = {32, 64, 128, 256};
  s.workers = env.workers;
  const fs::path cache = env.cache / key_name("ensemble_1d_64");
  HalfspaceEnsemble ens;
  ens.probes = s.probes;
  if (!env.cache.empty() && fs::exists(cache)) {
    std::ifstream in(cache);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      MemberRecord m;
      std::string cell;
      std::getline(ls, cell, ',');
      m.seed = std::stoull(cell);
      while (std::getline(ls, cell, ',')) m.T.push_back(std::strtod(cell.c_str(), nullptr));
      ens.members.push_back(m);
    }
    if (ens.members.size() == s.seeds.size()) return ens;
    ens.members.clear();
  }
  ens = run_halfspace_ensemble(s, {1, 0, 0});
  if (!env.cache.empty()) {
    fs::create_directories(env.cache);
    std::ofstream out(cache);
    for (const auto& m : ens.members) {
      out << m.seed;
      for (double T : m.T) {
        char buf[40];
        std::snprintf(buf, sizeof buf, ",%.17g", T);
        out << buf;
      }
      out << "\n";
    }
  }
  return ens;
}

Outcome criterion5(const Env& env) {
  EnsembleSpec s;
  const auto ens = ensemble_1d(env, s);
  const auto rep = fluctuation_stats(ens, s);
  std::ostringstream d;
  d << "sd[T]:";
  for (const auto& p : rep.per_distance) d << " " << num(p.sd) << "@" << p.distance;
  d << "; slope " << num(rep.exponent) << " (<= 0.9), 95% CI [" << num(rep.ci_lo) << ", " << num(rep.ci_hi)
    << "] (excludes 1)";
  return {rep.exponent <= 0.9 && rep.ci_hi < 1.0, d.str()};
}

Outcome criterion6(const Env& env) {
  EnsembleSpec s;
  const auto ens = ensemble_1d(env, s);
  const auto rep = mean_linearity(ens, {{32, 32}, {64, 64}, {128, 128}}, s);
  std::ostringstream d;
  d << "defects:";
  for (const auto& r : rep.rows) d << " " << num(r.D) << "@" << r.l + r.m;
  d << "; growth exponent " << num(rep.exponent) << " (< 1), 95% CI [" << num(rep.ci_lo) << ", " << num(rep.ci_hi)
    << "]";
  return {rep.exponent < 1.0, d.str()};
}

// --- 7: convex formula vs level-set evolution for a square and a two-valued table
Outcome criterion7(const Env&) {
  SpeedTable c;
  c.dim = 2;
  for (int k = 0; k < 8; ++k) {
    const double a = k * std::numbers::pi / 4;
    c.add({std::cos(a), std::sin(a), 0}, k % 2 ? std::sqrt(2.0) : 1.0);
  }
  Box A;
  A.lo = {-0.5, -0.5, 0};
  A.hi = {0.5, 0.5, 0};
  const double t = 0.5;
  const auto cv = theta_convex(A, c, t, 2);
  const double perim = polygon_perimeter(cv.polygon);
  std::vector<double> sd;
  std::ostringstream d;
  bool ok = true;
  for (double h : {1.0 / 128, 1.0 / 256}) {
    const double half = 0.5 + c.max_speed() * t + 0.25;
    const auto g = GridSpec::covering(2, {-half, -half, 0}, {half, half, 0}, h);
    const auto ls = levelset_evolve(A, g, c, t);
    sd.push_back(symmetric_difference(g, cv.mask(g), ls.mask(g)));
    const bool within = sd.back() <= 3.0 * h * perim;
    ok = ok && within;
    d << "h=1/" << int(std::round(1 / h)) << ": symdiff " << num(sd.back()) << " vs 3h perim " << num(3 * h * perim)
      << "; ";
  }
  // first order: halving h halves the area error, 10% slack
  const double ratio = sd[1] / sd[0];
  ok = ok && ratio <= 0.55;
  d << "ratio " << num(ratio) << " (<= 0.55)";
  return {ok, d.str()};
}

// --- 8: homogenization proxy on the 2D random medium
Outcome criterion8(const Env& env) {
  HomogSpec s;
  s.medium = example_medium(2);
  s.seeds = seed_range(8);
  s.A = Ball{{0, 0, 0}, 1.0};
  s.epsilons = {1.0 / 8, 1.0 / 16, 1.0 / 32};
  s.times = {1.0};
  s.delta = 0.1;
  s.speed = cached_speed_table_2d(env);
  s.workers = env.workers;
  const auto rep = run_homogenization(s);
  bool mono = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < rep.worst.size(); ++k) {
    const auto& e = rep.worst[k].error;
    if (k > 0) {
      const auto& p = rep.worst[k - 1].error;
      mono = mono && e.interior_sup <= p.interior_sup && e.exterior_sup <= p.exterior_sup;
    }
    d << "eps 1/" << int(std::round(1 / rep.worst[k].epsilon)) << ": int " << num(e.interior_sup) << " ext "
      << num(e.exterior_sup) << " symdiff " << num(e.symdiff) << "; ";
  }
  const auto& last = rep.worst.back().error;
  const bool area = last.symdiff <= 0.1 * last.theta_measure;
  d << "monotone " << (mono ? "yes" : "no") << ", final symdiff/|Theta| " << num(last.symdiff / last.theta_measure)
    << " (<= 0.1)";
  return {mono && area, d.str()};
}

// --- 9: exclusivity on the homogeneous medium
Outcome criterion9(const Env& env) {
  ExclusivitySpec s;
  s.medium = homogeneous(1);
  s.a = 0.05;
  s.enforce_range = false;
  s.workers = env.workers;
  const auto rec = exclusivity_probe(s);
  return {rec.worst_after_burn_in <= 0.06, "a = 0.05, sup of w over the ahead slab after burn-in " +
                                               num(rec.worst_after_burn_in) + " (<= 0.06), " +
                                               std::to_string(rec.times.size()) + " sampled times"};
}

// --- 10: perturbation inequality, both variants
Outcome criterion10(const Env& env) {
  CalibrationSpec cs;
  cs.profile = kProfile;
  const Constants k = calibrate(cs);
  bool ok = true;
  std::ostringstream d;
  d << "M* " << num(k.M_star) << ", kappa* " << num(k.kappa_star) << ", kappa0 " << num(k.kappa0) << "; ";
  for (auto kind : {PerturbationKind::LevelSet, PerturbationKind::Uniform}) {
    PerturbationSpec s;
    s.medium = example_medium(1);
    s.seeds = seed_range(20);
    s.kind = kind;
    s.eta = 0.02;
    s.constants = k;
    s.enforce_range = false;
    s.workers = env.workers;
    const auto rep = perturbation_check(s);
    std::size_t held = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) {
      held += r.holds;
      tightest = std::min(tightest, r.T2 - r.bound);
    }
    ok = ok && rep.all_hold;
    d << (kind == PerturbationKind::LevelSet ? "level-set" : "uniform") << ": " << held << "/" << rep.rows.size()
      << " hold, min T2 - bound " << num(tightest) << "; ";
  }
  return {ok, d.str()};
}

// --- 11: byte-identical artifacts on rerun (different worker counts)
Outcome criterion11(const Env& env) {
  const fs::path root = (env.cache.empty() ? fs::temp_directory_path() : env.cache) / "determinism";
  const std::vector<std::string> configs{
      R"({"command":"simulate","seeds":[4,9],"medium":{"dim":2,"g":{"kind":"hat","radius_len":2},"a_map":{"kind":"identity"}},
          "params":{"h_len":0.5,"lo_len":[-30,-30],"hi_len":[30,30],"datum":"step","set":{"kind":"ball","radius_len":8},
                    "t_end_time":15,"snapshots_time":[5,10]}})",
      R"({"command":"front-speed","seeds":{"first":0,"count":8},"medium":{"dim":1,"g":{"kind":"hat","radius_len":2},
          "a_map":{"kind":"identity"}},"params":{"probes_len":[16,64]}})",
      R"({"command":"hj","params":{"set":{"kind":"ball","radius_len":0.5},"speed":{"directions":[[1,0],[0,1],[-1,0],[0,-1]],
          "c":[1,0.5,1,0.5]},"max_gap":1.6,"t_time":0.5,"h_len":0.03125}})",
      R"({"command":"exclusivity","params":{"enforce_range":false,"horizon_time":80}})"};
  std::size_t files = 0, mismatches = 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto cfg = ExperimentConfig::parse(configs[i]);
    std::map<std::string, std::string> sums[2];
    for (int rep = 0; rep < 2; ++rep) {
      RunOptions o;
      o.out_dir = (root / (std::to_string(i) + "_" + std::to_string(rep))).string();
      o.workers = rep == 0 ? 1 : 2;
      const auto m = run_experiment(cfg, o);
      if (!m.jobs_ok()) return {false, command_name(cfg.command()) + " job failed: " + m.jobs.back().message};
      for (const auto& f : m.files) sums[rep][f.path] = f.sha256;
    }
    files += sums[0].size();
    for (const auto& [p, h] : sums[0])
      if (!sums[1].count(p) || sums[1][p] != h) {
        ++mismatches;
        d << "differs: " << command_name(cfg.command()) << "/" << p << "; ";
      }
    if (sums[0].size() != sums[1].size()) ++mismatches;
  }
  d << files << " artifacts over " << configs.size() << " commands, " << mismatches << " mismatches";
  return {mismatches == 0 && files > 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frontlab acceptance criteria"};
  std::vector<int> which;
  std::string cache;
  int workers = 0;
  app.add_option("--criterion,-c", which, "criterion number(s), default all")->check(CLI::Range(1, 11));
  app.add_option("--cache", cache, "directory for runs shared between criteria");
  app.add_option("--workers", workers, "worker threads (default FRONTLAB_WORKERS or 1)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome(const Env&)>> all{criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8,
                                                            criterion9, criterion10, criterion11};
  if (which.empty())
    for (int i = 1; i <= 11; ++i) which.push_back(i);
  Env env;
  env.cache = cache;
  env.workers = resolve_workers(workers);

  int failed = 0;
  for (int n : which) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[n - 1](env);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s (%.1f s): %s\n", n, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
