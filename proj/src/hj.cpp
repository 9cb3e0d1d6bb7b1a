#include "frontlab/hj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "frontlab/errors.hpp"
#include "frontlab/log.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

void check_table(const SpeedTable& c, int dim, double max_gap) {
  c.validate();
  if (c.dim != dim) throw ConfigError("hj: speed table dimension does not match the set");
  if (dim != 2 || c.size() == 1) return;
  std::vector<double> a;
  for (const auto& e : c.directions) {
    double t = std::atan2(e[1], e[0]);
    a.push_back(t < 0 ? t + kTwoPi : t);
  }
  std::sort(a.begin(), a.end());
  double gap = a.front() + kTwoPi - a.back();
  for (std::size_t i = 1; i < a.size(); ++i) gap = std::max(gap, a[i] - a[i - 1]);
  if (gap > max_gap + 1e-9) {
    std::ostringstream os;
    os << "hj: speed table angular gap " << gap << " exceeds " << max_gap;
    throw ConfigError(os.str());
  }
}

// c* on a fine angular lattice (2D) so the level-set loop avoids the table search.
class SpeedLookup {
 public:
  SpeedLookup(const SpeedTable& c, int dim) : c_(c), dim_(dim) {
    if (dim == 2) {
      bins_.resize(kBins + 1);
      for (std::size_t i = 0; i <= kBins; ++i) {
        const double a = kTwoPi * double(i) / double(kBins);
        bins_[i] = c.interpolate({std::cos(a), std::sin(a), 0.0});
      }
    }
  }
  double operator()(const Point& n) const {
    if (dim_ == 1) return c_.interpolate(n);
    if (dim_ == 2) {
      double a = std::atan2(n[1], n[0]);
      if (a < 0) a += kTwoPi;
      const double f = a / kTwoPi * double(kBins);
      const std::size_t i = std::min(std::size_t(f), kBins - 1);
      const double w = f - double(i);
      return (1 - w) * bins_[i] + w * bins_[i + 1];
    }
    return c_.interpolate(n);
  }

 private:
  static constexpr std::size_t kBins = 8192;
  const SpeedTable& c_;
  int dim_;
  std::vector<double> bins_;
};

// Grid points of a convex polygon, one x-interval per row.
Mask scan_polygon(const Polygon& p, const GridSpec& g) {
  Mask m(g.size(), 0);
  if (p.v.size() < 3) return m;
  for (std::size_t j = 0; j < g.shape[1]; ++j) {
    const double y = g.origin[1] + g.h * double(j);
    double lo = kInf, hi = -kInf;
    for (std::size_t k = 0; k < p.v.size(); ++k) {
      const auto& a = p.v[k];
      const auto& b = p.v[(k + 1) % p.v.size()];
      if ((a[1] - y) * (b[1] - y) > 0.0) continue;
      if (a[1] == b[1]) {
        lo = std::min({lo, a[0], b[0]});
        hi = std::max({hi, a[0], b[0]});
        continue;
      }
      const double x = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (lo > hi) continue;
    const double i0 = std::ceil((lo - g.origin[0]) / g.h), i1 = std::floor((hi - g.origin[0]) / g.h);
    for (double i = std::max(i0, 0.0); i <= std::min(i1, double(g.shape[0] - 1)); ++i)
      m[g.index(std::size_t(i), j)] = 1;
  }
  return m;
}

double max_grad_times_h(const ScalarField& f) {
  const auto& g = f.grid;
  const auto st = g.strides();
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    for (int a = 0; a < g.dim; ++a)
      if (ijk[a] + 1 < g.shape[a]) worst = std::max(worst, std::abs(f[n + st[a]] - f[n]));
  }
  return worst;
}

}  // namespace

bool ReachabilitySet::contains(const Point& x) const {
  if (representation == Representation::Polytope) {
    for (std::size_t k = 0; k < normals.size(); ++k)
      if (!(dot(x, normals[k], dim) < offsets[k])) return false;
    return true;
  }
  const auto& g = v.grid;
  std::array<std::size_t, 3> ijk{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) {
    const double f = std::round((x[a] - g.origin[a]) / g.h);
    if (f < 0 || f > double(g.shape[a] - 1)) return false;
    ijk[a] = std::size_t(f);
  }
  return v[g.index(ijk[0], ijk[1], ijk[2])] > 0.0;
}

Mask ReachabilitySet::mask(const GridSpec& g) const {
  if (representation == Representation::LevelSet && g.same_layout(v.grid)) {
    Mask m(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) m[n] = v[n] > 0.0;
    return m;
  }
  if (representation == Representation::Polytope && g.dim == 2 && polygon.v.size() >= 3) return scan_polygon(polygon, g);
  Mask m(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) m[n] = contains(g.coord(n));
  return m;
}

double ReachabilitySet::measure() const {
  if (representation == Representation::Polytope) {
    if (dim == 2 && polygon.v.size() >= 3) return polygon_area(polygon);
    if (dim == 1 && normals.size() == 2) return std::max(offsets[0] + offsets[1], 0.0);
    return kInf;
  }
  Mask m(v.values.size());
  for (std::size_t n = 0; n < m.size(); ++n) m[n] = v[n] > 0.0;
  return mask_measure(v.grid, m);
}

ReachabilitySet theta_convex(const SetDescriptor& A, const SpeedTable& speed, double t, int dim, const HJOptions& opt) {
  if (!(t >= 0.0)) throw ConfigError("theta_convex: negative time");
  check_table(speed, dim, opt.max_gap);
  ReachabilitySet r;
  r.representation = ReachabilitySet::Representation::Polytope;
  r.dim = dim;
  r.t = t;
  r.A = A;
  r.speed = speed;
  if (const auto* hs = std::get_if<HalfSpace>(&A)) {
    double n = std::sqrt(dot(hs->normal, hs->normal, dim));
    if (!(n > 0.0)) throw ConfigError("theta_convex: zero half-space normal");
    Point e = hs->normal;
    for (auto& x : e) x /= n;
    r.normals = {e};
    r.offsets = {hs->offset / n + speed.interpolate(e) * t};
    return r;
  }
  if (!is_bounded_convex(A)) throw ConfigError("theta_convex: A must be a bounded convex set (ball, box, polytope)");
  Polygon Ap;
  if (dim == 2) Ap = to_polygon(A);
  auto support = [&](const Point& e) {
    if (dim == 2 && std::holds_alternative<Polytope>(A)) return polygon_support(Ap, {e[0], e[1]});
    return support_function(A, e, dim);
  };
  r.normals = SpeedTable::direction_sample(dim, opt.directions);
  for (const auto& e : r.normals) r.offsets.push_back(support(e) + speed.interpolate(e) * t);
  if (dim == 2) {
    double big = 1.0;
    for (double o : r.offsets) big = std::max(big, 4.0 * std::abs(o));
    Polygon p{{{-big, -big}, {big, -big}, {big, big}, {-big, big}}};
    for (std::size_t k = 0; k < r.normals.size(); ++k)
      p = clip_halfplane(p, {r.normals[k][0], r.normals[k][1]}, r.offsets[k]);
    r.polygon = p;
  }
  return r;
}

ScalarField signed_distance(const SetDescriptor& A, const GridSpec& g) {
  ScalarField v(g, 0.0);
  const int d = g.dim;
  if (const auto* b = std::get_if<Ball>(&A)) {
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto x = g.coord(n);
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += (x[a] - b->center[a]) * (x[a] - b->center[a]);
      v[n] = b->radius - std::sqrt(s);
    }
    return v;
  }
  if (const auto* bx = std::get_if<Box>(&A)) {
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto x = g.coord(n);
      double out = 0.0, in = -kInf;
      for (int a = 0; a < d; ++a) {
        const double c = 0.5 * (bx->lo[a] + bx->hi[a]), hw = 0.5 * (bx->hi[a] - bx->lo[a]);
        const double q = std::abs(x[a] - c) - hw;
        out += std::max(q, 0.0) * std::max(q, 0.0);
        in = std::max(in, q);
      }
      v[n] = out > 0.0 ? -std::sqrt(out) : -in;
    }
    return v;
  }
  if (const auto* hs = std::get_if<HalfSpace>(&A)) {
    const double nn = std::sqrt(dot(hs->normal, hs->normal, d));
    for (std::size_t n = 0; n < g.size(); ++n) v[n] = (hs->offset - dot(g.coord(n), hs->normal, d)) / nn;
    return v;
  }
  if (const auto* pt = std::get_if<Polytope>(&A)) {
    // exact inside, a 1-Lipschitz lower bound outside; zero level is exact
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto x = g.coord(n);
      double m = kInf;
      for (const auto& f : pt->faces) m = std::min(m, (f.offset - dot(x, f.normal, d)) / std::sqrt(dot(f.normal, f.normal, d)));
      v[n] = m;
    }
    return v;
  }
  const Mask in = rasterize(A, g);
  Mask out(in.size());
  for (std::size_t n = 0; n < in.size(); ++n) out[n] = !in[n];
  const auto din = distance_to_mask(g, out), dout = distance_to_mask(g, in);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double a = std::isfinite(din[n]) ? din[n] : 1e30, b = std::isfinite(dout[n]) ? dout[n] : 1e30;
    v[n] = in[n] ? a : -b;
  }
  return v;
}

ReachabilitySet levelset_evolve(const ScalarField& v0, const SpeedTable& speed, double t_end, const HJOptions& opt) {
  const auto& g = v0.grid;
  const int d = g.dim;
  if (!(t_end >= 0.0)) throw ConfigError("levelset_evolve: negative time");
  check_table(speed, d, opt.max_gap);
  if (max_grad_times_h(v0) > std::max(0.25, 50.0 * g.h))
    log_warn("levelset_evolve: initial field has a steep jump; v0 should be Lipschitz (signed distance recommended)");

  const double dt_max = g.h / (speed.max_speed() * std::sqrt(double(d)));
  double dt = opt.dt > 0.0 ? opt.dt : opt.safety * dt_max;
  if (dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "levelset_evolve: dt = " << dt << " violates the CFL bound h/(max c* sqrt d) = " << dt_max;
    throw IntegrationError(os.str());
  }

  const SpeedLookup c(speed, d);
  const auto st = g.strides();
  std::vector<double> v = v0.values, nv(v.size());
  double t = 0.0;
  while (t < t_end) {
    const double step = std::min(dt, t_end - t);
    for (std::size_t n = 0; n < v.size(); ++n) {
      const auto ijk = g.unravel(n);
      const double vn = v[n];
      Point grad{0, 0, 0};
      double n2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double vm = ijk[a] > 0 ? v[n - st[a]] : vn;
        const double vp = ijk[a] + 1 < g.shape[a] ? v[n + st[a]] : vn;
        const double dm = (vm - vn) / g.h, dp = (vp - vn) / g.h;
        const double ga = std::max({dm, dp, 0.0});
        grad[a] = dp >= dm ? ga : -ga;
        n2 += ga * ga;
      }
      if (n2 == 0.0) {
        nv[n] = vn;
        continue;
      }
      const double norm = std::sqrt(n2);
      Point e{0, 0, 0};
      for (int a = 0; a < d; ++a) e[a] = -grad[a] / norm;
      nv[n] = vn + step * c(e) * norm;
    }
    v.swap(nv);
    t += step;
  }

  ReachabilitySet r;
  r.representation = ReachabilitySet::Representation::LevelSet;
  r.dim = d;
  r.t = t_end;
  r.speed = speed;
  r.v = ScalarField(g);
  r.v.values = std::move(v);
  r.v.t = v0.t + t_end;
  Mask a0(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) a0[n] = v0[n] > 0.0;
  r.A = RasterMask{g, a0};
  return r;
}

ReachabilitySet levelset_evolve(const SetDescriptor& A, const GridSpec& g, const SpeedTable& speed, double t_end,
                                const HJOptions& opt) {
  auto r = levelset_evolve(signed_distance(A, g), speed, t_end, opt);
  r.A = A;
  return r;
}

ReachabilitySet wulff_shape(const SpeedTable& speed) {
  speed.validate();
  ReachabilitySet r;
  r.representation = ReachabilitySet::Representation::Polytope;
  r.dim = speed.dim;
  r.t = 1.0;
  r.A = Ball{{0, 0, 0}, 0.0};
  r.speed = speed;
  r.normals = speed.directions;
  r.offsets = speed.c_star;
  if (speed.dim == 2) {
    const double big = 4.0 * speed.max_speed() + 1.0;
    Polygon p{{{-big, -big}, {big, -big}, {big, big}, {-big, big}}};
    for (std::size_t k = 0; k < r.normals.size(); ++k)
      p = clip_halfplane(p, {r.normals[k][0], r.normals[k][1]}, r.offsets[k]);
    for (const auto& x : p.v)
      if (std::abs(x[0]) >= 0.5 * big || std::abs(x[1]) >= 0.5 * big)
        throw ConfigError("wulff_shape: directions do not bound the shape");
    r.polygon = p;
  }
  return r;
}

}  // namespace frontlab
