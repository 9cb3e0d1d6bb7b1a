#pragma once

#include <array>
#include <variant>
#include <vector>

#include "frontlab/grid.hpp"

namespace frontlab {

struct WholeSpace {};
struct Ball {
  Point center{0.0, 0.0, 0.0};
  double radius = 1.0;
};
// {x : x.normal <= offset}, normal of unit length.
struct HalfSpace {
  Point normal{1.0, 0.0, 0.0};
  double offset = 0.0;
};
struct Polytope {
  std::vector<HalfSpace> faces;
};
struct Box {
  Point lo{0.0, 0.0, 0.0}, hi{0.0, 0.0, 0.0};
};
struct RasterMask {
  GridSpec grid;
  Mask mask;
};

using SetDescriptor = std::variant<WholeSpace, Ball, HalfSpace, Polytope, Box, RasterMask>;

bool contains(const SetDescriptor& s, const Point& x, int dim);
Mask rasterize(const SetDescriptor& s, const GridSpec& g);
bool is_bounded_convex(const SetDescriptor& s);

// Exact Euclidean distance (physical units) from every grid point to the
// nearest marked point; +inf everywhere when the mask is empty.
std::vector<double> distance_to_mask(const GridSpec& g, const Mask& m);

using Vec2 = std::array<double, 2>;
struct Polygon {
  std::vector<Vec2> v;  // counter-clockwise
};

Polygon clip_halfplane(const Polygon& p, const Vec2& n, double b);  // keeps n.x <= b
double polygon_area(const Polygon& p);
double polygon_perimeter(const Polygon& p);
bool polygon_contains(const Polygon& p, const Vec2& x);
double polygon_support(const Polygon& p, const Vec2& e);
Polygon regular_polygon(const Vec2& c, double r, int n);
// Convex 2D descriptor as a polygon (balls discretized with n vertices).
Polygon to_polygon(const SetDescriptor& s, int ball_vertices = 720);
// sup_{y in A} y.e for bounded convex A.
double support_function(const SetDescriptor& s, const Point& e, int dim);

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b);
std::vector<Vec2> sample_boundary(const Polygon& p, std::size_t n);

double mask_measure(const GridSpec& g, const Mask& m);
double symmetric_difference(const GridSpec& g, const Mask& a, const Mask& b);

// Boundary points of a mask: marked points with an unmarked axis neighbour.
std::vector<Vec2> mask_boundary_points(const GridSpec& g, const Mask& m);

}  // namespace frontlab
