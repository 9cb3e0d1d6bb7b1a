#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "frontlab/medium.hpp"

namespace frontlab {

// Uniform vertex grid: point (i,j,k) sits at origin + h*(i,j,k). Axes beyond
// dim have extent 1.
struct GridSpec {
  int dim = 1;
  std::array<std::size_t, 3> shape{1, 1, 1};
  double h = 0.1;
  Point origin{0.0, 0.0, 0.0};

  static GridSpec covering(int dim, const Point& lo, const Point& hi, double h);

  std::size_t size() const noexcept { return shape[0] * shape[1] * shape[2]; }
  std::array<std::size_t, 3> strides() const noexcept { return {shape[1] * shape[2], shape[2], 1}; }
  std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const noexcept {
    return (i * shape[1] + j) * shape[2] + k;
  }
  std::array<std::size_t, 3> unravel(std::size_t n) const noexcept {
    return {n / (shape[1] * shape[2]), (n / shape[2]) % shape[1], n % shape[2]};
  }
  Point coord(std::size_t n) const noexcept {
    const auto ijk = unravel(n);
    Point p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = origin[a] + h * double(ijk[a]);
    return p;
  }
  Point upper() const noexcept {
    Point p = origin;
    for (int a = 0; a < dim; ++a) p[a] += h * double(shape[a] - 1);
    return p;
  }
  bool same_layout(const GridSpec& o) const noexcept;
};

// Maps grid coordinates to physical points of the medium: x = anchor + sum_a q_a axes[a].
// Identity by default; half-space runs rotate axis 0 onto the propagation direction.
struct Frame {
  Point anchor{0.0, 0.0, 0.0};
  std::array<Point, 3> axes{Point{1, 0, 0}, Point{0, 1, 0}, Point{0, 0, 1}};

  static Frame aligned(const Point& e, int dim);
  Point map(const Point& q) const noexcept {
    Point x = anchor;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) x[b] += q[a] * axes[a][b];
    return x;
  }
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  double t = 0.0;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  double& operator[](std::size_t n) noexcept { return values[n]; }
  double operator[](std::size_t n) const noexcept { return values[n]; }
};

using Mask = std::vector<std::uint8_t>;

// Flat binary: "FLF1", u32 dim, 3 x u64 shape, f64 h, 3 x f64 origin, f64 t, values.
void write_field(const std::string& path, const ScalarField& f);
ScalarField read_field(const std::string& path);
void write_mask(const std::string& path, const GridSpec& g, const Mask& m);

}  // namespace frontlab
