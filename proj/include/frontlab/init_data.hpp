#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/medium.hpp"

namespace frontlab {

// Mollifier constants from scripts/search_mollifier.py: with a = 0.03, N = 1
// the mass of phi_a inside B_N((N+a)e_1) is 0.442, 0.393, 0.356 in d = 1, 2, 3.
inline constexpr double kMollifierA = 0.03;
inline constexpr double kMollifierN = 1.0;

// Radial profile of phi_a = zeta * xi_a / ||zeta * xi_a||_1, unit scale.
class MollifierKernel {
 public:
  MollifierKernel(int dim, double a, std::size_t nodes = 2001);

  int dim() const noexcept { return dim_; }
  double a() const noexcept { return a_; }
  double support() const noexcept { return 0.5 + a_; }
  // Tabulated value (cubic spline), zero beyond the support.
  double operator()(double r) const;
  // Direct quadrature, no table.
  double exact(double r) const;
  // Laplacian from the distributional Laplacian of zeta.
  double laplacian(double r) const;
  // Mass of phi_a inside B_N((N + a) e_1).
  double ball_mass(double N) const;
  double mass() const;
  // Marginal tail G(t) = integral of phi_a over {z_1 >= t}.
  double marginal_tail(double t) const;

  struct Impl;

 private:
  int dim_;
  double a_;
  std::shared_ptr<const Impl> impl_;
};

// phi_{a,R}(x) = R^{-d} phi_a(x / R)
class MollifiedBump {
 public:
  MollifiedBump(int dim, double a, double R);
  double operator()(double r) const;
  double laplacian(double r) const;
  double support() const noexcept { return R_ * kernel_.support(); }
  double R() const noexcept { return R_; }
  const MollifierKernel& kernel() const noexcept { return kernel_; }

 private:
  MollifierKernel kernel_;
  double R_;
};

MollifiedBump mollified_bump(int dim, double a, double R);

// psi: linear on [0, q/3] up to 1 - 2 theta1/3, then psi'' = -kappa F0(psi) until psi' = 0 at psi = q.
// kappa is fixed by the endpoint conditions; curvature is spent where F0 is large.
class Reparam {
 public:
  Reparam(double theta_star, const IgnitionProfile& profile);
  double operator()(double v) const;
  double d1(double v) const;
  double d2(double v) const;
  double q() const noexcept { return q_; }
  double knee() const noexcept { return p_; }
  double plateau() const noexcept { return p_ + tau_; }
  double kappa() const noexcept { return kappa_; }
  // max(|psi'|, |psi''|)
  double L() const noexcept { return L_; }

 private:
  struct Table;
  IgnitionProfile f_;
  double q_, p_, yp_, s0_, tau_, kappa_, L_;
  std::shared_ptr<const Table> table_;
};

struct DatumOptions {
  double theta_star = 0.0;  // 0 = theta1/4
  double a_shift = 0.0;
  double tol = 1e-6;
  std::optional<double> R;  // skip the search
  double mollifier_a = kMollifierA;
  double N = kMollifierN;
  bool verify = true;
};

struct InitialDatum {
  ScalarField field;
  SetDescriptor S;
  double R0 = 0.0;  // field vanishes outside B_{R0}(S) (before the a-shift)
  double R = 0.0;
  double N = kMollifierN;
  double mollifier_a = kMollifierA;
  double theta_star = 0.0625;
  double a_shift = 0.0;
  double min_defect = 0.0;  // min of discrete Laplacian + F0 over the grid
  std::size_t worst_index = 0;
};

// min over the grid of Delta_h u + F0(u), edge-copy ghosts.
double subsolution_defect(const ScalarField& f, const IgnitionProfile& p, std::size_t* worst = nullptr);

InitialDatum build_initial_datum(const SetDescriptor& S, const IgnitionProfile& profile, const GridSpec& grid,
                                 const DatumOptions& opt = {});
InitialDatum build_halfspace_datum(const Point& e, double l, const IgnitionProfile& profile, const GridSpec& grid,
                                   const Frame& frame = {}, const DatumOptions& opt = {});
// Smallest R on the search ladder passing the 1D (half-space) or radial check.
double minimal_mollifier_scale(const IgnitionProfile& profile, int dim, double h, const DatumOptions& opt,
                               double ball_radius = -1.0);
// Plain step data amplitude * chi_S, for ensemble runs.
ScalarField step_datum(const SetDescriptor& S, const GridSpec& grid, double amplitude, const Frame& frame = {});

}  // namespace frontlab
