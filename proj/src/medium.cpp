#include "frontlab/medium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double default_cap(int dim) {
  switch (dim) {
    case 1: return 4096.0;
    case 2: return 256.0;
    default: return 48.0;
  }
}

}  // namespace

IgnitionProfile IgnitionProfile::make(double theta0, double lipschitz, double m1, double alpha1,
                                      std::size_t samples) {
  if (!(theta0 > 0.0 && theta0 < 0.5))
    throw ConfigError("profile: theta0 must lie in (0, 1/2)");
  if (!(lipschitz >= 1.0)) throw ConfigError("profile: M must be >= 1");
  if (!(m1 >= 1.0)) throw ConfigError("profile: m1 must be >= 1");
  if (!(alpha1 > 0.0)) throw ConfigError("profile: alpha1 must be > 0");
  if (samples < 3) throw ConfigError("profile: need at least 3 samples");

  IgnitionProfile p;
  p.theta0_ = theta0;
  p.M_ = lipschitz;
  p.m1_ = m1;
  p.alpha1_ = alpha1;

  // ramp - cap is increasing on (theta0, 1), so the join is a single root.
  double lo = theta0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double diff = lipschitz * (mid - theta0) - alpha1 * std::pow(1.0 - mid, m1);
    (diff < 0.0 ? lo : hi) = mid;
  }
  p.join_ = 0.5 * (lo + hi);

  const double cap_slope = alpha1 * m1 * std::pow(1.0 - p.join_, m1 - 1.0);
  if (cap_slope > lipschitz * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "profile: Lipschitz invariant violated, cap slope " << cap_slope << " exceeds M = "
       << lipschitz << " at the join u = " << p.join_;
    throw ConstructionError(os.str());
  }
  p.tabulate(samples);
  return p;
}

IgnitionProfile IgnitionProfile::scaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigError("profile: scale factor must be > 0");
  IgnitionProfile p = *this;
  p.scale_ *= factor;
  p.tabulate(samples_.size());
  return p;
}

void IgnitionProfile::tabulate(std::size_t n) {
  samples_.resize(n);
  for (std::size_t i = 0; i < n; ++i) samples_[i] = (*this)(double(i) / double(n - 1));
}

HypothesisParams HypothesisParams::from_profile(const IgnitionProfile& p, int dim) {
  HypothesisParams h;
  h.dim = dim;
  h.theta1 = p.theta1();
  h.m1 = p.m1();
  h.alpha1 = p.alpha1();
  h.M = p.lipschitz();
  // The cap itself satisfies the (H3) lower bound.
  h.m3 = p.m1();
  h.alpha3 = std::min(p.alpha1(), 1.0);
  h.theta_star = h.theta1 / 4.0;
  return h;
}

double HypothesisParams::c1() const { return 2.0 * std::sqrt(M * dim); }

double HypothesisParams::kappa1() const {
  return 1.0 + std::sqrt(dim / M) * std::log(2.0 * dim / (1.0 - 2.0 * theta1));
}

double HypothesisParams::beta1() const {
  return std::max((m1 - 1.0) / m1, (m2 + alpha2) / (m2 + 1.0));
}

double HypothesisParams::beta3() const {
  const double d2 = 2.0 * dim + 2.0;
  return std::max({beta1(), m3 / (m3 + 2.0 * m4), d2 / (d2 + m4p)});
}

void HypothesisParams::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("hypothesis: dim must be 1, 2 or 3");
  if (!(theta1 > 0.0 && theta1 < 0.5)) throw ConfigError("hypothesis: theta1 must lie in (0, 1/2)");
  if (!(theta_star > 0.0 && theta_star <= std::min(theta1, 0.5) / 2.0))
    throw ConfigError("hypothesis: theta_star must lie in (0, min(theta1, 1/2)/2]");
  const double b = beta1();
  if (!(b > 0.0 && b < 1.0)) throw ConfigError("hypothesis: beta1 must lie in (0,1)");
  if (!(M >= 1.0)) throw ConfigError("hypothesis: M must be >= 1");
}

double Bump::radial(double rho, int j) const noexcept {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Hat: return rho >= radius ? 0.0 : amplitude * (1.0 - rho / radius);
    case Kind::Power: return amplitude * std::pow(1.0 + rho * rho, -0.5 * decay);
    case Kind::Table: {
      if (table.empty()) return 0.0;
      const double rmax = table_step * double(table.size() - 1);
      if (rho >= rmax) return table.back() == 0.0 ? 0.0 : table.back() * std::pow(rmax / rho, decay);
      const double s = rho / table_step;
      const auto i = std::size_t(s);
      const double w = s - double(i);
      return table[i] + w * (table[i + 1] - table[i]);
    }
    case Kind::Indexed: return amplitude * std::clamp(double(j) - rho, 0.0, 1.0);
  }
  return 0.0;
}

double Bump::tail(double rho, int j_max) const noexcept {
  rho = std::max(rho, 0.0);
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Hat:
    case Kind::Power: return radial(rho);
    case Kind::Indexed: return radial(rho, j_max);
    case Kind::Table: {
      if (table.empty()) return 0.0;
      const double rmax = table_step * double(table.size() - 1);
      if (rho >= rmax) return radial(rho);
      double best = radial(rho);
      for (std::size_t i = std::size_t(rho / table_step) + 1; i < table.size(); ++i)
        best = std::max(best, table[i]);
      return best;
    }
  }
  return 0.0;
}

double Bump::max_value() const noexcept { return tail(0.0, 1 << 20); }

double Bump::support(int j_max) const noexcept {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Hat: return radius;
    case Kind::Indexed: return double(j_max);
    case Kind::Power: return kInf;
    case Kind::Table: {
      if (table.empty()) return 0.0;
      if (table.back() != 0.0) return kInf;
      std::size_t last = table.size() - 1;
      while (last > 0 && table[last - 1] == 0.0) --last;
      return table_step * double(last);
    }
  }
  return kInf;
}

double Bump::max_stretch() const noexcept {
  return std::max({stretch[0], stretch[1], stretch[2]});
}

double AmplitudeMap::amplitude(double omega) const noexcept {
  switch (kind) {
    case Kind::Identity: return omega;
    case Kind::Constant: return value;
    case Kind::Bernoulli: return omega < p ? value : 0.0;
    case Kind::Uniform: return lo + (hi - lo) * omega;
    case Kind::IndexPower: return 1.0;
  }
  return 0.0;
}

int AmplitudeMap::index(double omega) const noexcept {
  if (kind != Kind::IndexPower) return 1;
  if (omega <= 0.0) return j_max;
  const double j = std::floor(std::pow(omega, -1.0 / gamma));
  return int(std::clamp(j, 1.0, double(j_max)));
}

double AmplitudeMap::sup() const noexcept {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::Constant:
    case Kind::Bernoulli: return std::max(value, 0.0);
    case Kind::Uniform: return std::max({lo, hi, 0.0});
    case Kind::IndexPower: return 1.0;
  }
  return 0.0;
}

double AmplitudeMap::capped_mass() const noexcept {
  return kind == Kind::IndexPower ? std::pow(double(j_max), -gamma) : 0.0;
}

double sample_site(std::uint64_t seed, const Lattice& k) noexcept {
  std::uint64_t h = splitmix(seed ^ 0xD1B54A32D192ED03ULL);
  for (int i = 0; i < 3; ++i)
    h = splitmix(h ^ splitmix(std::uint64_t(k[i]) + 0x632BE59BD9B4E019ULL * std::uint64_t(i + 1)));
  return double(h >> 11) * 0x1.0p-53;
}

RandomMedium::RandomMedium(MediumSpec spec) : spec_(std::move(spec)) {
  const int d = spec_.dim;
  if (d < 1 || d > 3) throw ConfigError("medium: dim must be 1, 2 or 3");
  for (int i = 0; i < d; ++i)
    if (!(spec_.g.stretch[i] > 0.0)) throw ConfigError("medium: g.stretch entries must be > 0");
  if (spec_.g.kind == Bump::Kind::Indexed) {
    if (spec_.a_map.kind != AmplitudeMap::Kind::IndexPower)
      throw ConfigError("medium: indexed bumps need an index_power a_map");
    if (!(spec_.a_map.gamma > 3.0 * d + 2.0))
      throw ConfigError("medium: index tail exponent gamma must exceed 3d+2");
    if (spec_.a_map.j_max < 1) throw ConfigError("medium: j_max must be >= 1");
  }
  if (spec_.range && !(*spec_.range > 0.0)) throw ConfigError("medium: range must be > 0");
  if (homogeneous()) return;

  const double cap = spec_.window_cap > 0.0 ? spec_.window_cap : default_cap(d);
  const int jm = spec_.a_map.j_max;
  double reach = spec_.g.support(jm) * spec_.g.max_stretch();
  if (spec_.range) reach = std::min(reach, 0.5 * *spec_.range);
  if (!std::isfinite(reach)) {
    // decaying bump: stop where a*g drops below 1e-12 of the F0 scale
    const double supa = spec_.a_map.sup();
    reach = 1.0;
    while (supa * tail_x(reach) >= 1e-12 && reach < 2.0 * cap) reach *= 1.25;
  }
  clipped_ = reach > cap;
  window_ = std::min(reach, cap);

  auto off = std::make_shared<Offsets>();
  const double sd = std::sqrt(double(d));
  const double lim = window_ + sd;
  const int w = int(std::ceil(lim));
  const int w1 = d > 1 ? w : 0, w2 = d > 2 ? w : 0;
  std::vector<std::array<std::int32_t, 3>> ks;
  std::vector<double> ns;
  for (int a = -w; a <= w; ++a)
    for (int b = -w1; b <= w1; ++b)
      for (int c = -w2; c <= w2; ++c) {
        const double n = std::sqrt(double(a * a + b * b + c * c));
        if (n <= lim) {
          ks.push_back({a, b, c});
          ns.push_back(n);
        }
      }
  std::vector<std::size_t> order(ks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return ns[i] < ns[j]; });
  off->k.reserve(ks.size());
  off->norm.reserve(ks.size());
  for (auto i : order) {
    off->k.push_back(ks[i]);
    off->norm.push_back(ns[i]);
  }
  offsets_ = std::move(off);
}

bool RandomMedium::homogeneous() const noexcept {
  return spec_.g.kind == Bump::Kind::Zero || spec_.a_map.sup() * spec_.g.max_value() == 0.0;
}

double RandomMedium::envelope_bound() const noexcept {
  return homogeneous() ? 1.0 : 1.0 + spec_.a_map.sup() * spec_.g.max_value();
}

double RandomMedium::tail_x(double dist) const noexcept {
  if (spec_.range && dist >= 0.5 * *spec_.range) return 0.0;
  return spec_.g.tail(dist / spec_.g.max_stretch(), spec_.a_map.j_max);
}

double RandomMedium::site_value(const Lattice& k) const noexcept {
  Lattice q{};
  for (int i = 0; i < 3; ++i) {
    std::int64_t v = k[i] + spec_.shift[i];
    if (spec_.period[i] > 0) {
      v %= spec_.period[i];
      if (v < 0) v += spec_.period[i];
    }
    q[i] = i < spec_.dim ? v : 0;
  }
  return sample_site(spec_.seed, q);
}

double RandomMedium::site_bump(const Point& z, double omega) const noexcept {
  const int d = spec_.dim;
  double r2 = 0.0, s2 = 0.0;
  for (int i = 0; i < d; ++i) {
    r2 += z[i] * z[i];
    const double t = z[i] / spec_.g.stretch[i];
    s2 += t * t;
  }
  double trunc = 1.0;
  if (spec_.range) {
    const double gap = 0.5 * *spec_.range - std::sqrt(r2);
    const double fac = spec_.g.kind == Bump::Kind::Indexed ? 2.0 : 1.0;
    trunc = std::min(1.0, std::max(0.0, fac * gap));
    if (trunc == 0.0) return 0.0;
  }
  const double rho = std::sqrt(s2);
  if (spec_.g.kind == Bump::Kind::Indexed) return spec_.g.radial(rho, spec_.a_map.index(omega)) * trunc;
  const double a = spec_.a_map.amplitude(omega);
  if (a == 0.0) return 0.0;
  return a * spec_.g.radial(rho) * trunc;
}

double RandomMedium::envelope(const Point& x, std::vector<Lattice>* access_log) const {
  if (homogeneous()) return 1.0;
  const int d = spec_.dim;
  const double sd = std::sqrt(double(d));
  const double supa = spec_.a_map.sup();
  Lattice base{0, 0, 0};
  for (int i = 0; i < d; ++i) base[i] = std::int64_t(std::floor(x[i]));

  const auto& off = *offsets_;
  double best = 0.0;
  for (std::size_t n = 0; n < off.k.size(); ++n) {
    const double lb = off.norm[n] - sd;
    if (lb > 0.0 && supa * tail_x(lb) <= std::max(best, 1e-12)) break;
    Lattice k{0, 0, 0};
    Point z{0.0, 0.0, 0.0};
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      k[i] = base[i] + off.k[n][i];
      z[i] = x[i] - double(k[i]);
      r2 += z[i] * z[i];
    }
    const double dist = std::sqrt(r2);
    if (dist > window_ || (spec_.range && dist >= 0.5 * *spec_.range)) continue;
    if (supa * tail_x(dist) <= best) continue;
    if (access_log) {
      Lattice q = k;
      for (int i = 0; i < d; ++i) q[i] += spec_.shift[i];
      access_log->push_back(q);
    }
    best = std::max(best, site_bump(z, site_value(k)));
  }
  return 1.0 + best;
}

RandomMedium RandomMedium::with_seed(std::uint64_t seed) const {
  RandomMedium m = *this;
  m.spec_.seed = seed;
  return m;
}

RandomMedium RandomMedium::shifted(const Lattice& y) const {
  RandomMedium m = *this;
  for (int i = 0; i < 3; ++i) m.spec_.shift[i] += y[i];
  return m;
}

RandomMedium truncate_range(const RandomMedium& m, double n) {
  if (!(n >= m.spec().n4)) {
    std::ostringstream os;
    os << "truncate_range: n = " << n << " is below n4 = " << m.spec().n4;
    throw ConfigError(os.str());
  }
  MediumSpec s = m.spec();
  s.range = s.range ? std::min(*s.range, n) : n;
  return RandomMedium(std::move(s));
}

}  // namespace frontlab
