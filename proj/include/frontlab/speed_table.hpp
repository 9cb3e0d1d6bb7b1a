#pragma once

#include <string>
#include <vector>

#include "frontlab/grid.hpp"

namespace frontlab {

// Front speeds c*(e) on a sample of unit directions.
struct SpeedTable {
  int dim = 2;
  std::vector<Point> directions;
  std::vector<double> tbar;  // mean arrival slope, time per length
  std::vector<double> c_star;
  std::vector<double> stderr_c;
  double l_min = 0.0, l_max = 0.0;

  std::size_t size() const noexcept { return directions.size(); }
  double max_speed() const;
  double min_speed() const;
  // Piecewise linear in angle (2D), spherical barycentric on the nearest triangle (3D).
  double interpolate(const Point& e) const;

  static SpeedTable constant(int dim, double c, std::size_t n = 0);
  // n equally spaced angles in 2D, icosphere vertices in 3D (n = subdivision level).
  template <class F>
  static SpeedTable from_function(int dim, std::size_t n, F f) {
    SpeedTable t;
    t.dim = dim;
    t.directions = direction_sample(dim, n);
    for (const auto& e : t.directions) {
      const double c = f(e);
      t.c_star.push_back(c);
      t.tbar.push_back(1.0 / c);
      t.stderr_c.push_back(0.0);
    }
    return t;
  }
  static std::vector<Point> direction_sample(int dim, std::size_t n);

  void add(const Point& e, double c, double err = 0.0);
  void validate() const;
};

// 2D: angle,c_star,stderr. 3D: x,y,z,c_star,stderr. 1D: sign,c_star,stderr.
void write_speed_csv(const std::string& path, const SpeedTable& t);
SpeedTable read_speed_csv(const std::string& path, int dim);

// Unit vectors of the icosphere with the given subdivision level.
std::vector<Point> icosphere(int level);

}  // namespace frontlab
