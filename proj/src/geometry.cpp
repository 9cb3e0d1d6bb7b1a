#include "frontlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot3(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

// Lower envelope of parabolas (Felzenszwalb-Huttenlocher), index units.
void envelope_1d(const double* f, double* out, std::size_t n, std::vector<std::size_t>& v,
                 std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  long k = -1;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double fq = f[q] + double(q) * double(q);
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    for (;;) {
      const std::size_t p = v[std::size_t(k)];
      s = (fq - (f[p] + double(p) * double(p))) / (2.0 * double(q) - 2.0 * double(p));
      if (s <= z[std::size_t(k)]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[std::size_t(k)] = q;
    z[std::size_t(k)] = s;
    z[std::size_t(k) + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  std::size_t j = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[j + 1] < double(q)) ++j;
    const double dq = double(q) - double(v[j]);
    out[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

bool contains(const SetDescriptor& s, const Point& x, int dim) {
  return std::visit(
      [&](const auto& a) -> bool {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, WholeSpace>) {
          return true;
        } else if constexpr (std::is_same_v<T, Ball>) {
          double r2 = 0.0;
          for (int i = 0; i < dim; ++i) r2 += (x[i] - a.center[i]) * (x[i] - a.center[i]);
          return r2 <= a.radius * a.radius;
        } else if constexpr (std::is_same_v<T, HalfSpace>) {
          return dot3(x, a.normal, dim) <= a.offset;
        } else if constexpr (std::is_same_v<T, Polytope>) {
          for (const auto& f : a.faces)
            if (dot3(x, f.normal, dim) > f.offset) return false;
          return true;
        } else if constexpr (std::is_same_v<T, Box>) {
          for (int i = 0; i < dim; ++i)
            if (x[i] < a.lo[i] || x[i] > a.hi[i]) return false;
          return true;
        } else {
          // nearest raster cell
          const auto& g = a.grid;
          std::array<std::size_t, 3> ijk{0, 0, 0};
          for (int i = 0; i < g.dim; ++i) {
            const double q = std::round((x[i] - g.origin[i]) / g.h);
            if (q < 0.0 || q > double(g.shape[i] - 1)) return false;
            ijk[i] = std::size_t(q);
          }
          return a.mask[g.index(ijk[0], ijk[1], ijk[2])] != 0;
        }
      },
      s);
}

Mask rasterize(const SetDescriptor& s, const GridSpec& g) {
  Mask m(g.size(), 0);
  for (std::size_t n = 0; n < g.size(); ++n) m[n] = contains(s, g.coord(n), g.dim) ? 1 : 0;
  return m;
}

bool is_bounded_convex(const SetDescriptor& s) {
  if (std::holds_alternative<Ball>(s)) return std::get<Ball>(s).radius > 0.0;
  if (std::holds_alternative<Box>(s)) return true;
  if (std::holds_alternative<Polytope>(s)) return !std::get<Polytope>(s).faces.empty();
  return false;
}

std::vector<double> distance_to_mask(const GridSpec& g, const Mask& m) {
  std::vector<double> d(g.size());
  bool any = false;
  for (std::size_t n = 0; n < g.size(); ++n) {
    d[n] = m[n] ? 0.0 : kInf;
    any = any || m[n];
  }
  if (!any) return d;
  const auto st = g.strides();
  std::vector<std::size_t> v;
  std::vector<double> z, line, out;
  for (int a = 0; a < g.dim; ++a) {
    const std::size_t n = g.shape[a];
    line.resize(n);
    out.resize(n);
    const std::size_t lines = g.size() / n;
    for (std::size_t l = 0; l < lines; ++l) {
      // l enumerates index tuples with axis a removed
      std::size_t base = 0, rem = l;
      for (int b = 2; b >= 0; --b) {
        if (b == a) continue;
        base += (rem % g.shape[b]) * st[b];
        rem /= g.shape[b];
      }
      for (std::size_t q = 0; q < n; ++q) line[q] = d[base + q * st[a]];
      envelope_1d(line.data(), out.data(), n, v, z);
      for (std::size_t q = 0; q < n; ++q) d[base + q * st[a]] = out[q];
    }
  }
  for (auto& x : d) x = std::sqrt(x) * g.h;
  return d;
}

Polygon clip_halfplane(const Polygon& p, const Vec2& n, double b) {
  Polygon r;
  const std::size_t m = p.v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2& a = p.v[i];
    const Vec2& c = p.v[(i + 1) % m];
    const double fa = n[0] * a[0] + n[1] * a[1] - b;
    const double fc = n[0] * c[0] + n[1] * c[1] - b;
    if (fa <= 0.0) r.v.push_back(a);
    if ((fa < 0.0 && fc > 0.0) || (fa > 0.0 && fc < 0.0)) {
      const double t = fa / (fa - fc);
      r.v.push_back({a[0] + t * (c[0] - a[0]), a[1] + t * (c[1] - a[1])});
    }
  }
  return r;
}

double polygon_area(const Polygon& p) {
  double s = 0.0;
  const std::size_t m = p.v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % m];
    s += a[0] * b[1] - a[1] * b[0];
  }
  return 0.5 * std::abs(s);
}

double polygon_perimeter(const Polygon& p) {
  double s = 0.0;
  const std::size_t m = p.v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % m];
    s += std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  return s;
}

bool polygon_contains(const Polygon& p, const Vec2& x) {
  const std::size_t m = p.v.size();
  if (m < 3) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % m];
    if ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) < 0.0) return false;
  }
  return true;
}

double polygon_support(const Polygon& p, const Vec2& e) {
  double s = -kInf;
  for (const auto& v : p.v) s = std::max(s, v[0] * e[0] + v[1] * e[1]);
  return s;
}

Polygon regular_polygon(const Vec2& c, double r, int n) {
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    p.v.push_back({c[0] + r * std::cos(a), c[1] + r * std::sin(a)});
  }
  return p;
}

Polygon to_polygon(const SetDescriptor& s, int ball_vertices) {
  if (const auto* b = std::get_if<Ball>(&s)) {
    if (!(b->radius > 0.0)) throw ConfigError("set: empty ball");
    return regular_polygon({b->center[0], b->center[1]}, b->radius, ball_vertices);
  }
  if (const auto* bx = std::get_if<Box>(&s)) {
    if (!(bx->hi[0] > bx->lo[0] && bx->hi[1] > bx->lo[1])) throw ConfigError("set: empty box");
    return Polygon{{{bx->lo[0], bx->lo[1]}, {bx->hi[0], bx->lo[1]}, {bx->hi[0], bx->hi[1]}, {bx->lo[0], bx->hi[1]}}};
  }
  if (const auto* pt = std::get_if<Polytope>(&s)) {
    const double big = 1e7;
    Polygon p{{{-big, -big}, {big, -big}, {big, big}, {-big, big}}};
    for (const auto& f : pt->faces) p = clip_halfplane(p, {f.normal[0], f.normal[1]}, f.offset);
    if (p.v.size() < 3) throw ConfigError("set: empty polytope");
    for (const auto& v : p.v)
      if (std::abs(v[0]) >= 0.5 * big || std::abs(v[1]) >= 0.5 * big)
        throw ConfigError("set: unbounded polytope");
    return p;
  }
  throw ConfigError("set: expected a bounded convex set (ball, box or polytope)");
}

double support_function(const SetDescriptor& s, const Point& e, int dim) {
  if (const auto* b = std::get_if<Ball>(&s)) return dot3(b->center, e, dim) + b->radius * std::sqrt(dot3(e, e, dim));
  if (const auto* bx = std::get_if<Box>(&s)) {
    double h = 0.0;
    for (int i = 0; i < dim; ++i) h += std::max(bx->lo[i] * e[i], bx->hi[i] * e[i]);
    return h;
  }
  if (dim == 2 && std::holds_alternative<Polytope>(s)) return polygon_support(to_polygon(s), {e[0], e[1]});
  throw ConfigError("set: support function needs a bounded convex set");
}

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) return kInf;
  auto one = [](const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    double worst = 0.0;
    for (const auto& x : p) {
      double best = kInf;
      for (const auto& y : q) best = std::min(best, (x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]));
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(one(a, b), one(b, a));
}

std::vector<Vec2> sample_boundary(const Polygon& p, std::size_t n) {
  std::vector<Vec2> out;
  const double per = polygon_perimeter(p);
  const std::size_t m = p.v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = p.v[i];
    const auto& b = p.v[(i + 1) % m];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    const std::size_t k = std::max<std::size_t>(1, std::size_t(std::ceil(double(n) * len / per)));
    for (std::size_t j = 0; j < k; ++j) {
      const double t = double(j) / double(k);
      out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
  }
  return out;
}

double mask_measure(const GridSpec& g, const Mask& m) {
  std::size_t c = 0;
  for (auto v : m) c += v ? 1 : 0;
  return double(c) * std::pow(g.h, g.dim);
}

double symmetric_difference(const GridSpec& g, const Mask& a, const Mask& b) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] != 0) != (b[i] != 0) ? 1 : 0;
  return double(c) * std::pow(g.h, g.dim);
}

std::vector<Vec2> mask_boundary_points(const GridSpec& g, const Mask& m) {
  std::vector<Vec2> out;
  if (g.dim != 2) throw ConfigError("mask_boundary_points: 2D only");
  const std::size_t n0 = g.shape[0], n1 = g.shape[1];
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j) {
      if (!m[g.index(i, j)]) continue;
      const bool edge = i == 0 || j == 0 || i + 1 == n0 || j + 1 == n1 || !m[g.index(i - 1, j)] ||
                        !m[g.index(i + 1, j)] || !m[g.index(i, j - 1)] || !m[g.index(i, j + 1)];
      if (edge) {
        const auto p = g.coord(g.index(i, j));
        out.push_back({p[0], p[1]});
      }
    }
  return out;
}

}  // namespace frontlab
