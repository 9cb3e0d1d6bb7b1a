#include "frontlab/speed_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "frontlab/errors.hpp"

namespace frontlab {

namespace {

constexpr double kPi = std::numbers::pi;

Point normalize(Point p) {
  const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  return {p[0] / n, p[1] / n, p[2] / n};
}

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double angle_of(const Point& e) {
  double a = std::atan2(e[1], e[0]);
  if (a < 0) a += 2 * kPi;
  return a;
}

}  // namespace

std::vector<Point> icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Point> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                       {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p = normalize(p);
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const Point p = normalize({v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]});
      v.push_back(p);
      return mid[key] = int(v.size() - 1);
    };
    std::vector<std::array<int, 3>> g;
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      g.push_back({tri[0], a, c});
      g.push_back({tri[1], b, a});
      g.push_back({tri[2], c, b});
      g.push_back({a, b, c});
    }
    f.swap(g);
  }
  return v;
}

std::vector<Point> SpeedTable::direction_sample(int dim, std::size_t n) {
  if (dim == 1) return {{1, 0, 0}, {-1, 0, 0}};
  if (dim == 2) {
    if (n == 0) n = 720;
    std::vector<Point> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 2 * kPi * double(i) / double(n);
      out[i] = {std::cos(a), std::sin(a), 0.0};
    }
    return out;
  }
  return icosphere(n == 0 ? 4 : int(n));
}

SpeedTable SpeedTable::constant(int dim, double c, std::size_t n) {
  return from_function(dim, n, [c](const Point&) { return c; });
}

void SpeedTable::add(const Point& e, double c, double err) {
  directions.push_back(normalize(e));
  c_star.push_back(c);
  tbar.push_back(1.0 / c);
  stderr_c.push_back(err);
}

double SpeedTable::max_speed() const { return *std::max_element(c_star.begin(), c_star.end()); }
double SpeedTable::min_speed() const { return *std::min_element(c_star.begin(), c_star.end()); }

void SpeedTable::validate() const {
  if (directions.empty()) throw ConfigError("speed table: no directions");
  if (c_star.size() != directions.size()) throw ConfigError("speed table: size mismatch");
  for (double c : c_star)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("speed table: speeds must be positive and finite");
}

double SpeedTable::interpolate(const Point& e_in) const {
  if (directions.size() == 1) return c_star[0];
  if (dim == 1) return e_in[0] >= 0 ? c_star[0] : c_star[directions.size() > 1 ? 1 : 0];
  if (dim == 2) {
    const double a = angle_of(e_in);
    // neighbours in angle, with wraparound
    std::size_t below = 0, above = 0;
    double db = 1e300, da = 1e300;
    for (std::size_t i = 0; i < directions.size(); ++i) {
      const double ai = angle_of(directions[i]);
      double d = a - ai;
      if (d < 0) d += 2 * kPi;
      if (d < db) {
        db = d;
        below = i;
      }
      double u = ai - a;
      if (u < 0) u += 2 * kPi;
      if (u < da) {
        da = u;
        above = i;
      }
    }
    if (db + da == 0.0) return c_star[below];
    return (c_star[below] * da + c_star[above] * db) / (db + da);
  }
  const Point e = normalize(e_in);
  std::array<std::size_t, 3> nn{0, 0, 0};
  std::array<double, 3> best{-2, -2, -2};
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const double c = dot(e, directions[i]);
    for (int k = 0; k < 3; ++k)
      if (c > best[k]) {
        for (int m = 2; m > k; --m) {
          best[m] = best[m - 1];
          nn[m] = nn[m - 1];
        }
        best[k] = c;
        nn[k] = i;
        break;
      }
  }
  if (best[0] > 1.0 - 1e-14) return c_star[nn[0]];
  Eigen::Matrix3d A;
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 3; ++r) A(r, k) = directions[nn[k]][r];
  Eigen::Vector3d w = A.colPivHouseholderQr().solve(Eigen::Vector3d(e[0], e[1], e[2]));
  if (!w.allFinite() || (w.array() < -1e-9).any()) return c_star[nn[0]];
  w /= w.sum();
  return w[0] * c_star[nn[0]] + w[1] * c_star[nn[1]] + w[2] * c_star[nn[2]];
}

void write_speed_csv(const std::string& path, const SpeedTable& t) {
  std::ofstream os(path);
  if (!os) throw ConfigError("speed table: cannot write " + path);
  os << std::setprecision(17);
  if (t.dim == 2)
    os << "angle,c_star,stderr\n";
  else if (t.dim == 3)
    os << "x,y,z,c_star,stderr\n";
  else
    os << "sign,c_star,stderr\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& e = t.directions[i];
    if (t.dim == 2)
      os << angle_of(e);
    else if (t.dim == 3)
      os << e[0] << ',' << e[1] << ',' << e[2];
    else
      os << (e[0] >= 0 ? 1 : -1);
    os << ',' << t.c_star[i] << ',' << (i < t.stderr_c.size() ? t.stderr_c[i] : 0.0) << '\n';
  }
}

SpeedTable read_speed_csv(const std::string& path, int dim) {
  std::ifstream is(path);
  if (!is) throw ConfigError("speed table: cannot read " + path);
  SpeedTable t;
  t.dim = dim;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    Point e{0, 0, 0};
    std::size_t k = 0;
    if (dim == 2) {
      e = {std::cos(v[0]), std::sin(v[0]), 0};
      k = 1;
    } else if (dim == 3) {
      e = {v[0], v[1], v[2]};
      k = 3;
    } else {
      e = {v[0] >= 0 ? 1.0 : -1.0, 0, 0};
      k = 1;
    }
    if (v.size() < k + 1) throw ConfigError("speed table: short row in " + path);
    t.add(e, v[k], v.size() > k + 1 ? v[k + 1] : 0.0);
  }
  t.validate();
  return t;
}

}  // namespace frontlab
