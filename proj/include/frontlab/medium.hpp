#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace frontlab {

using Point = std::array<double, 3>;
using Lattice = std::array<std::int64_t, 3>;

// Canonical ignition profile: min(M (u - theta0)_+, alpha1 (1-u)^m1), times an
// optional overall factor (used for the parabolic scaling check).
class IgnitionProfile {
 public:
  static IgnitionProfile make(double theta0, double lipschitz, double m1, double alpha1,
                              std::size_t samples = 10001);

  double operator()(double u) const noexcept {
    if (!(u > theta0_) || u >= 1.0) return 0.0;
    const double ramp = M_ * (u - theta0_);
    const double w = 1.0 - u;
    double cap;
    if (m1_ == 2.0)
      cap = alpha1_ * w * w;
    else if (m1_ == 1.0)
      cap = alpha1_ * w;
    else
      cap = alpha1_ * std::pow(w, m1_);
    return scale_ * (ramp < cap ? ramp : cap);
  }

  IgnitionProfile scaled(double factor) const;

  double theta0() const noexcept { return theta0_; }
  double lipschitz() const noexcept { return M_ * scale_; }
  double m1() const noexcept { return m1_; }
  double alpha1() const noexcept { return alpha1_ * scale_; }
  double scale() const noexcept { return scale_; }
  // u where the ramp meets the cap.
  double join() const noexcept { return join_; }
  // Width of the band near 1 where the cap branch is active, capped by theta0.
  double theta1() const noexcept { return std::min(theta0_, 1.0 - join_); }
  double max_value() const noexcept { return scale_ * M_ * (join_ - theta0_); }

  const std::vector<double>& samples() const noexcept { return samples_; }
  double sample_step() const noexcept { return 1.0 / double(samples_.size() - 1); }

 private:
  void tabulate(std::size_t n);

  double theta0_ = 0.25, M_ = 1.0, m1_ = 2.0, alpha1_ = 0.5;
  double scale_ = 1.0;
  double join_ = 0.5;
  std::vector<double> samples_;
};

// Parameter record for (H1)-(H4''), with the derived constants.
struct HypothesisParams {
  int dim = 1;
  double theta1 = 0.25, m1 = 2.0, alpha1 = 0.5, M = 1.0;
  double m2 = 1.0, alpha2 = 0.0;
  double m3 = 2.0, alpha3 = 0.5;
  double m4 = 3.0, m4p = 3.0, alpha4 = 1.0, n4 = 1.0;
  double a2 = 0.0, alpha2p = 0.0;
  double theta_star = 0.0625;

  static HypothesisParams from_profile(const IgnitionProfile& p, int dim);

  double c1() const;
  double kappa1() const;
  double beta1() const;
  double beta3() const;
  void validate() const;
};

// Radial envelope bump g. Anisotropy enters through per-axis stretch:
// g(x) = radial(|(x_1/s_1, ..., x_d/s_d)|).
struct Bump {
  enum class Kind { Zero, Hat, Power, Table, Indexed };
  Kind kind = Kind::Zero;
  double amplitude = 1.0;
  double radius = 1.0;  // hat support
  double decay = 3.0;   // m' for power law and table tail
  std::array<double, 3> stretch{1.0, 1.0, 1.0};
  std::vector<double> table;  // radial samples on [0, table_step*(n-1)]
  double table_step = 0.1;

  // j only matters for Indexed (Example 1.5' family g_j).
  double radial(double rho, int j = 1) const noexcept;
  // sup of radial over [rho, inf); j_max bounds Indexed bumps.
  double tail(double rho, int j_max = 1) const noexcept;
  double max_value() const noexcept;
  // Radius beyond which radial vanishes, infinity for power/table tails.
  double support(int j_max = 1) const noexcept;
  double max_stretch() const noexcept;
};

struct AmplitudeMap {
  enum class Kind { Identity, Constant, Bernoulli, Uniform, IndexPower };
  Kind kind = Kind::Identity;
  double value = 1.0;           // Constant level, Bernoulli high value
  double p = 0.5;               // Bernoulli success probability
  double lo = 0.0, hi = 1.0;    // Uniform
  double gamma = 12.0;          // IndexPower tail exponent
  int j_max = 8;                // IndexPower cap

  double amplitude(double omega) const noexcept;
  int index(double omega) const noexcept;
  double sup() const noexcept;
  // Mass of the law sitting at the cap (IndexPower), 0 otherwise.
  double capped_mass() const noexcept;
};

double sample_site(std::uint64_t seed, const Lattice& k) noexcept;

struct MediumSpec {
  IgnitionProfile profile = IgnitionProfile::make(0.25, 1.0, 2.0, 0.5);
  Bump g;
  AmplitudeMap a_map;
  std::uint64_t seed = 0;
  int dim = 1;
  std::optional<double> range;  // truncation n
  double n4 = 1.0;
  Lattice shift{0, 0, 0};   // relabels omega_k -> omega_{k+shift}
  Lattice period{0, 0, 0};  // 0 = aperiodic lattice along that axis
  double window_cap = 0.0;  // 0 picks a per-dimension default
};

class RandomMedium {
 public:
  explicit RandomMedium(MediumSpec spec);

  double envelope(const Point& x, std::vector<Lattice>* access_log = nullptr) const;
  double eval(const Point& x, double u) const {
    if (u < 0.0 || u > 1.0) return 0.0;
    const double f0 = spec_.profile(u);
    return f0 == 0.0 ? 0.0 : envelope(x) * f0;
  }

  // a(omega) g(z) including truncation, for one site value.
  double site_bump(const Point& z, double omega) const noexcept;
  double site_value(const Lattice& k) const noexcept;

  bool homogeneous() const noexcept;
  double envelope_bound() const noexcept;
  double window_radius() const noexcept { return window_; }
  bool window_clipped() const noexcept { return clipped_; }

  const MediumSpec& spec() const noexcept { return spec_; }
  const IgnitionProfile& profile() const noexcept { return spec_.profile; }
  int dim() const noexcept { return spec_.dim; }

  RandomMedium with_seed(std::uint64_t seed) const;
  RandomMedium shifted(const Lattice& y) const;

 private:
  struct Offsets {
    std::vector<std::array<std::int32_t, 3>> k;
    std::vector<double> norm;
  };
  double tail_x(double dist) const noexcept;

  MediumSpec spec_;
  double window_ = 0.0;
  bool clipped_ = false;
  std::shared_ptr<const Offsets> offsets_;
};

RandomMedium truncate_range(const RandomMedium& m, double n);

}  // namespace frontlab
