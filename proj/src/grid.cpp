#include "frontlab/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "frontlab/errors.hpp"

namespace frontlab {

GridSpec GridSpec::covering(int dim, const Point& lo, const Point& hi, double h) {
  if (dim < 1 || dim > 3) throw ConfigError("grid: dim must be 1, 2 or 3");
  if (!(h > 0.0)) throw ConfigError("grid: h must be > 0");
  GridSpec g;
  g.dim = dim;
  g.h = h;
  for (int a = 0; a < dim; ++a) {
    if (!(hi[a] > lo[a])) throw ConfigError("grid: empty extent");
    g.origin[a] = lo[a];
    g.shape[a] = std::size_t(std::ceil((hi[a] - lo[a]) / h - 1e-9)) + 1;
  }
  return g;
}

bool GridSpec::same_layout(const GridSpec& o) const noexcept {
  if (dim != o.dim || shape != o.shape) return false;
  if (std::abs(h - o.h) > 1e-12 * h) return false;
  for (int a = 0; a < dim; ++a)
    if (std::abs(origin[a] - o.origin[a]) > 1e-9 * h) return false;
  return true;
}

Frame Frame::aligned(const Point& e, int dim) {
  Frame f;
  if (dim == 1) return f;
  double n = 0.0;
  for (int a = 0; a < dim; ++a) n += e[a] * e[a];
  n = std::sqrt(n);
  if (!(n > 0.0)) throw ConfigError("frame: zero direction");
  Point u{e[0] / n, e[1] / n, dim > 2 ? e[2] / n : 0.0};
  f.axes[0] = u;
  if (dim == 2) {
    f.axes[1] = {-u[1], u[0], 0.0};
    f.axes[2] = {0.0, 0.0, 1.0};
    return f;
  }
  // pick the coordinate axis least aligned with u, Gram-Schmidt the rest
  int m = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(u[a]) < std::abs(u[m])) m = a;
  Point v{0.0, 0.0, 0.0};
  v[m] = 1.0;
  const double dot = v[0] * u[0] + v[1] * u[1] + v[2] * u[2];
  for (int a = 0; a < 3; ++a) v[a] -= dot * u[a];
  const double vn = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (auto& c : v) c /= vn;
  f.axes[1] = v;
  f.axes[2] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return f;
}

namespace {

template <class T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("field file truncated");
  return v;
}

void put_header(std::ofstream& os, const GridSpec& g, double t) {
  os.write("FLF1", 4);
  put(os, std::uint32_t(g.dim));
  for (auto s : g.shape) put(os, std::uint64_t(s));
  put(os, g.h);
  for (auto o : g.origin) put(os, o);
  put(os, t);
}

}  // namespace

void write_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  put_header(os, f.grid, f.t);
  os.write(reinterpret_cast<const char*>(f.values.data()), std::streamsize(f.values.size() * sizeof(double)));
}

ScalarField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FLF1", 4) != 0) throw ConfigError(path + ": not a field file");
  GridSpec g;
  g.dim = int(get<std::uint32_t>(is));
  for (auto& s : g.shape) s = std::size_t(get<std::uint64_t>(is));
  g.h = get<double>(is);
  for (auto& o : g.origin) o = get<double>(is);
  ScalarField f(g);
  f.t = get<double>(is);
  is.read(reinterpret_cast<char*>(f.values.data()), std::streamsize(f.values.size() * sizeof(double)));
  if (!is) throw ConfigError(path + ": truncated values");
  return f;
}

void write_mask(const std::string& path, const GridSpec& g, const Mask& m) {
  ScalarField f(g);
  for (std::size_t i = 0; i < m.size(); ++i) f.values[i] = m[i] ? 1.0 : 0.0;
  write_field(path, f);
}

}  // namespace frontlab
