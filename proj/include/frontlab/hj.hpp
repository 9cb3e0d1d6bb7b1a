#pragma once

#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/speed_table.hpp"

namespace frontlab {

// Reached set of the effective front dynamics at time t, either as an intersection of
// half-spaces {x.e < h_e} or as the positive set of a level-set field.
struct ReachabilitySet {
  enum class Representation { Polytope, LevelSet };
  Representation representation = Representation::Polytope;
  int dim = 2;
  double t = 0.0;
  SetDescriptor A;
  SpeedTable speed;

  std::vector<Point> normals;
  std::vector<double> offsets;
  Polygon polygon;  // 2D bounded polytope form

  ScalarField v;  // level-set form

  bool contains(const Point& x) const;
  Mask mask(const GridSpec& g) const;
  double measure() const;  // area (2D polygon or mask) / volume of the mask
};

struct HJOptions {
  std::size_t directions = 0;      // dense sample for the half-space intersection; 0 = 720 (2D) / level 4 (3D)
  double max_gap = 0.7854;         // largest allowed angular gap in the speed table, radians
  double safety = 0.9;             // dt = safety * h / (max c* sqrt(d))
  double dt = 0.0;                 // explicit step; refused above the CFL bound
};

// Intersection over sampled e of {x.e < sup_A y.e + c*(e) t}; c* is interpolated between
// table samples. Half-spaces are accepted as the one unbounded case.
ReachabilitySet theta_convex(const SetDescriptor& A, const SpeedTable& speed, double t, int dim,
                             const HJOptions& opt = {});

// Signed distance: positive inside A, negative outside.
ScalarField signed_distance(const SetDescriptor& A, const GridSpec& g);

// v_t = c*(-grad v/|grad v|) |grad v| by a first-order Rouy-Tourin upwind scheme with
// edge-copy boundaries. Returns {v(t_end) > 0} with the field.
ReachabilitySet levelset_evolve(const ScalarField& v0, const SpeedTable& speed, double t_end,
                                const HJOptions& opt = {});
ReachabilitySet levelset_evolve(const SetDescriptor& A, const GridSpec& g, const SpeedTable& speed, double t_end,
                                const HJOptions& opt = {});

// Intersection of {y.e < c*(e)} over the table's own directions.
ReachabilitySet wulff_shape(const SpeedTable& speed);

}  // namespace frontlab
