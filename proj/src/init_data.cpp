#include "frontlab/init_data.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include "frontlab/errors.hpp"
#include "frontlab/log.hpp"

namespace frontlab {

namespace {

using boost::math::interpolators::cardinal_cubic_b_spline;
using boost::math::quadrature::gauss_kronrod;
constexpr double kPi = std::numbers::pi;

double xi(double s, double a) {
  const double t = s / a;
  if (t >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t * t));
}

double zeta(int d, double rho) {
  if (rho >= 0.5) return 0.0;
  if (d == 1) return 0.5 - rho;
  if (d == 2) return -std::log(2.0 * rho);
  return 1.0 / rho - 2.0;
}

double surface(int d, double s) {
  if (d == 1) return 2.0;
  if (d == 2) return 2.0 * kPi * s;
  return 4.0 * kPi * s * s;
}

double zeta_l1(int d) {
  if (d == 1) return 0.25;
  if (d == 2) return kPi / 8.0;
  return kPi / 6.0;
}

template <class F>
double gk(F f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return gauss_kronrod<double, 31>::integrate(f, lo, hi, 8, 1e-10);
}

// Integrate with breakpoints inside (lo, hi).
template <class F>
double gk_split(F f, double lo, double hi, std::vector<double> cuts) {
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(lo, cuts[i]), b = std::min(hi, cuts[i + 1]);
    if (b > a) s += gk(f, a, b);
  }
  return s;
}

// Mean of zeta over the sphere of radius s centred at distance r from the origin.
double zeta_mean(int d, double r, double s) {
  if (d == 1) return 0.5 * (zeta(1, r + s) + zeta(1, std::abs(r - s)));
  if (r == 0.0 || s == 0.0) return zeta(d, std::max(r, s));
  if (d == 3) {
    const double lo = std::abs(r - s), hi = std::min(r + s, 0.5);
    if (lo >= hi) return 0.0;
    return ((hi - hi * hi) - (lo - lo * lo)) / (2.0 * r * s);
  }
  if (r + s <= 0.5) return -std::log(2.0 * std::max(r, s));
  if (std::abs(r - s) >= 0.5) return 0.0;
  // ln_-(2 rho) = -ln(2 rho) + ln_+(2 rho); the circle mean of -ln(2 rho) is -ln(2 max(r, s))
  const double k = std::clamp((0.25 - r * r - s * s) / (2.0 * r * s), -1.0, 1.0);
  const double th0 = std::acos(k);
  auto f = [&](double th) { return 0.5 * std::log(4.0 * (r * r + s * s + 2.0 * r * s * std::cos(th))); };
  return -std::log(2.0 * std::max(r, s)) + gk(f, 0.0, th0) / kPi;
}

// Mean of xi_a over the sphere of radius s centred at distance r.
double xi_mean(int d, double r, double s, double a) {
  if (d == 1) return 0.5 * (xi(r + s, a) + xi(std::abs(r - s), a));
  if (r == 0.0) return xi(s, a);
  if (std::abs(r - s) >= a) return 0.0;
  if (d == 3) {
    const double lo = std::abs(r - s), hi = std::min(r + s, a);
    return gk([&](double rho) { return xi(rho, a) * rho; }, lo, hi) / (2.0 * r * s);
  }
  const double k = std::clamp((a * a - r * r - s * s) / (2.0 * r * s), -1.0, 1.0);
  const double th0 = std::acos(k);
  auto f = [&](double th) { return xi(std::sqrt(std::max(0.0, r * r + s * s + 2.0 * r * s * std::cos(th))), a); };
  return gk(f, th0, kPi) / kPi;
}

// Share of the sphere of radius rho with first coordinate >= t.
double cap_fraction(int d, double t, double rho) {
  if (rho == 0.0) return t <= 0.0 ? 1.0 : 0.0;
  const double c = std::clamp(t / rho, -1.0, 1.0);
  if (d == 1) return 0.5 * ((rho >= t ? 1.0 : 0.0) + (-rho >= t ? 1.0 : 0.0));
  if (d == 2) return std::acos(c) / kPi;
  return 0.5 * (1.0 - c);
}

// Fixed composite Gauss rule, for integrands built on the spline tables.
template <class F>
double composite(F f, double lo, double hi, int panels = 64) {
  if (!(hi > lo)) return 0.0;
  const double w = (hi - lo) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) s += boost::math::quadrature::gauss<double, 20>::integrate(f, lo + i * w, lo + (i + 1) * w);
  return s;
}

// Share of the sphere of radius s around x (|x - c| = r) lying in B_P(c).
double sphere_fraction(int d, double r, double s, double P) {
  if (s == 0.0) return r <= P ? 1.0 : 0.0;
  if (d == 1) return 0.5 * ((r + s <= P ? 1.0 : 0.0) + (std::abs(r - s) <= P ? 1.0 : 0.0));
  if (r == 0.0) return s <= P ? 1.0 : 0.0;
  const double c = std::clamp((P * P - r * r - s * s) / (2.0 * r * s), -1.0, 1.0);
  if (d == 2) return (kPi - std::acos(c)) / kPi;
  return 0.5 * (1.0 + c);
}

}  // namespace

struct MollifierKernel::Impl {
  double norm = 1.0;  // 1 / ||zeta * xi||_1
  double step = 0.0, tstep = 0.0;
  std::unique_ptr<cardinal_cubic_b_spline<double>> phi, tail;
};

namespace {

std::mutex g_cache_mutex;
std::map<std::pair<int, long long>, std::shared_ptr<const MollifierKernel::Impl>>& cache() {
  static std::map<std::pair<int, long long>, std::shared_ptr<const MollifierKernel::Impl>> c;
  return c;
}

double phi_raw(int d, double a, double r) {
  auto f = [&](double s) { return xi(s, a) * surface(d, s) * zeta_mean(d, r, s); };
  std::vector<double> cuts{r, std::abs(0.5 - r)};
  return gk_split(f, 0.0, a, cuts);
}

}  // namespace

MollifierKernel::MollifierKernel(int dim, double a, std::size_t nodes) : dim_(dim), a_(a) {
  if (dim < 1 || dim > 3) throw ConfigError("mollifier: dim must be 1, 2 or 3");
  if (!(a > 0.0 && a < 0.125)) throw ConfigError("mollifier: a must lie in (0, 1/8)");
  const auto key = std::make_pair(dim, (long long)std::llround(a * 1e12) * 100000 + (long long)nodes);
  {
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache().find(key);
    if (it != cache().end()) {
      impl_ = it->second;
      return;
    }
  }
  auto impl = std::make_shared<Impl>();
  const double xi_l1 = gk([&](double s) { return xi(s, a) * surface(dim, s); }, 0.0, a);
  impl->norm = 1.0 / (zeta_l1(dim) * xi_l1);
  const double rmax = 0.5 + a;
  impl->step = rmax / double(nodes - 1);
  std::vector<double> v(nodes);
  for (std::size_t i = 0; i < nodes; ++i) v[i] = impl->norm * phi_raw(dim, a, impl->step * double(i));
  v.back() = 0.0;
  impl->phi = std::make_unique<cardinal_cubic_b_spline<double>>(v.data(), v.size(), 0.0, impl->step, 0.0, 0.0);

  // upper tail of the e_1 marginal: G(t) = int phi(rho) |S(rho)| frac{z_1 >= t} drho
  auto phi_at = [&](double r) { return r >= rmax ? 0.0 : (*impl->phi)(r); };
  impl->tstep = 2.0 * rmax / double(nodes - 1);
  std::vector<double> tail(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double t = -rmax + impl->tstep * double(i);
    auto f = [&](double rho) { return phi_at(rho) * surface(dim, rho) * cap_fraction(dim, t, rho); };
    tail[i] = composite(f, 0.0, std::abs(t)) + composite(f, std::abs(t), rmax);
  }
  const double total = tail[0];
  for (auto& x : tail) x /= total;
  impl->tail = std::make_unique<cardinal_cubic_b_spline<double>>(tail.data(), tail.size(), -rmax, impl->tstep, 0.0, 0.0);

  std::lock_guard<std::mutex> lk(g_cache_mutex);
  cache()[key] = impl;
  impl_ = impl;
}

double MollifierKernel::operator()(double r) const {
  r = std::abs(r);
  if (r >= support()) return 0.0;
  return (*impl_->phi)(r);
}

double MollifierKernel::exact(double r) const {
  r = std::abs(r);
  if (r >= support()) return 0.0;
  return impl_->norm * phi_raw(dim_, a_, r);
}

double MollifierKernel::laplacian(double r) const {
  r = std::abs(r);
  const double a = a_;
  double v;
  if (dim_ == 1)
    v = -2.0 * xi(r, a) + xi(r + 0.5, a) + xi(std::abs(r - 0.5), a);
  else if (dim_ == 2)
    v = -2.0 * kPi * xi(r, a) + 2.0 * kPi * xi_mean(2, r, 0.5, a);
  else
    v = -4.0 * kPi * xi(r, a) + 4.0 * kPi * xi_mean(3, r, 0.5, a);
  return impl_->norm * v;
}

double MollifierKernel::ball_mass(double N) const {
  const double c = N + a_;
  auto f = [&](double s) { return (*this)(s) * surface(dim_, s) * sphere_fraction(dim_, c, s, N); };
  return composite(f, 0.0, c - N) + composite(f, c - N, support());
}

double MollifierKernel::mass() const {
  return composite([&](double s) { return (*this)(s) * surface(dim_, s); }, 0.0, support(), 256);
}

double MollifierKernel::marginal_tail(double t) const {
  const double rmax = support();
  if (t <= -rmax) return 1.0;
  if (t >= rmax) return 0.0;
  return std::clamp((*impl_->tail)(t), 0.0, 1.0);
}

MollifiedBump::MollifiedBump(int dim, double a, double R) : kernel_(dim, a), R_(R) {
  if (!(R >= 1.0)) throw ConfigError("mollified_bump: R must be >= 1");
}

double MollifiedBump::operator()(double r) const { return std::pow(R_, -kernel_.dim()) * kernel_(r / R_); }

double MollifiedBump::laplacian(double r) const {
  return std::pow(R_, -kernel_.dim() - 2) * kernel_.laplacian(r / R_);
}

MollifiedBump mollified_bump(int dim, double a, double R) { return MollifiedBump(dim, a, R); }

struct Reparam::Table {
  std::unique_ptr<boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>> psi;
};

Reparam::Reparam(double theta_star, const IgnitionProfile& profile) : f_(profile) {
  q_ = 1.0 - theta_star;
  p_ = q_ / 3.0;
  yp_ = 1.0 - 2.0 * profile.theta1() / 3.0;
  if (!(yp_ > p_ && yp_ < q_)) throw ConfigError("psi: need (1-theta*)/3 < 1 - 2 theta1/3 < 1 - theta*");
  s0_ = yp_ / p_;
  const double energy = gk([&](double w) { return profile(w); }, yp_, q_);
  if (!(energy > 0.0)) throw ConfigError("psi: F0 vanishes on [1 - 2 theta1/3, 1 - theta*]");
  kappa_ = s0_ * s0_ / (2.0 * energy);

  // psi'^2 = s0^2 - 2 kappa int_{yp}^{psi} F0, so v(psi) = p + int dw / psi'(w); tabulate psi(v) by RK4
  const std::size_t steps = 200000;
  double dv = 0.0;
  {
    // length of the curved piece, w = q - y^2 removes the square-root endpoint
    auto slope = [&](double w) {
      const double e = s0_ * s0_ - 2.0 * kappa_ * gk([&](double z) { return profile(z); }, yp_, w);
      return std::sqrt(std::max(e, 0.0));
    };
    const double ymax = std::sqrt(q_ - yp_);
    tau_ = gk([&](double y) {
      const double w = q_ - y * y;
      const double sl = slope(w);
      return y == 0.0 ? 2.0 / std::sqrt(2.0 * kappa_ * profile(q_)) : 2.0 * y / sl;
    }, 0.0, ymax);
    dv = tau_ / double(steps);
  }
  if (p_ + tau_ > q_) throw ConfigError("psi: curved piece does not fit below 1 - theta*");
  std::vector<double> y(steps + 1), dy(steps + 1);
  double u = yp_, du = s0_;
  auto acc = [&](double w) { return -kappa_ * profile(std::min(w, q_)); };
  for (std::size_t i = 0; i <= steps; ++i) {
    y[i] = std::min(u, q_);
    dy[i] = std::max(du, 0.0);
    const double k1u = du, k1v = acc(u);
    const double k2u = du + 0.5 * dv * k1v, k2v = acc(u + 0.5 * dv * k1u);
    const double k3u = du + 0.5 * dv * k2v, k3v = acc(u + 0.5 * dv * k2u);
    const double k4u = du + dv * k3v, k4v = acc(u + dv * k3u);
    u += dv / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    du += dv / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  y.back() = q_;
  dy.back() = 0.0;
  double fmax = 0.0;
  for (int i = 0; i <= 1000; ++i) fmax = std::max(fmax, profile(yp_ + (q_ - yp_) * i / 1000.0));
  L_ = std::max(s0_, kappa_ * fmax);
  auto t = std::make_shared<Table>();
  t->psi = std::make_unique<boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>>(
      std::move(y), std::move(dy), p_, dv);
  table_ = t;
}

double Reparam::operator()(double v) const {
  if (v <= 0.0) return 0.0;
  if (v <= p_) return s0_ * v;
  if (v >= p_ + tau_) return q_;
  return std::min((*table_->psi)(v), q_);
}

double Reparam::d1(double v) const {
  if (v < 0.0) return 0.0;
  if (v <= p_) return s0_;
  if (v >= p_ + tau_) return 0.0;
  return std::max(table_->psi->prime(v), 0.0);
}

double Reparam::d2(double v) const {
  if (v <= p_ || v >= p_ + tau_) return 0.0;
  return -kappa_ * f_((*this)(v));
}

double subsolution_defect(const ScalarField& f, const IgnitionProfile& p, std::size_t* worst) {
  const auto& g = f.grid;
  const auto st = g.strides();
  const double inv = 1.0 / (g.h * g.h);
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    const double u = f.values[n];
    double lap = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double lo = ijk[a] > 0 ? f.values[n - st[a]] : u;
      const double hi = ijk[a] + 1 < g.shape[a] ? f.values[n + st[a]] : u;
      lap += lo + hi - 2.0 * u;
    }
    const double v = lap * inv + p(u);
    if (v < best) {
      best = v;
      arg = n;
    }
  }
  if (worst) *worst = arg;
  return best;
}

namespace {

struct Setup {
  double theta_star, q;
  Reparam psi;
};

Setup setup(const IgnitionProfile& profile, const DatumOptions& opt) {
  const double th1 = profile.theta1();
  const double ts = opt.theta_star > 0.0 ? opt.theta_star : th1 / 4.0;
  if (!(ts > 0.0 && ts <= std::min(th1, 0.5) / 2.0))
    throw ConfigError("initial datum: theta_star must lie in (0, min(theta1, 1/2)/2]");
  if (!(opt.a_shift >= 0.0 && opt.a_shift < 1.0)) throw ConfigError("initial datum: a_shift must lie in [0,1)");
  return {ts, 1.0 - ts, Reparam(ts, profile)};
}

// u_L(r) / q for S = B_rho(c): the ball B_P(c), P = rho + N R, convolved with phi_{a,R}.
double ball_profile(const MollifierKernel& k, double R, double P, double r) {
  const int d = k.dim();
  const double smax = k.support();
  if (r + R * smax <= P) return 1.0;
  if (r >= P + R * smax) return 0.0;
  auto f = [&](double sig) { return k(sig) * surface(d, sig) * sphere_fraction(d, r, R * sig, P); };
  std::array<double, 4> c{0.0, std::abs(P - r) / R, (P + r) / R, smax};
  std::sort(c.begin(), c.end());
  double v = 0.0;
  for (int i = 0; i < 3; ++i) v += composite(f, c[i], std::min(c[i + 1], smax), 16);
  return std::clamp(v, 0.0, 1.0);
}

// Discrete check of psi(u_L) on a 1D profile sampled at spacing h; radial term when radial.
double profile_defect(const std::vector<double>& u, double h, double r0, int d, bool radial,
                      const IgnitionProfile& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    double lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h);
    if (radial && d > 1) {
      const double r = r0 + h * double(i);
      if (r > 0.0) lap += (d - 1) / r * (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    best = std::min(best, lap + p(u[i]));
  }
  return best;
}

// The grid may sit at any phase relative to the profile, so sample finely and check every phase.
double check_scale(const IgnitionProfile& profile, int dim, double h, const DatumOptions& opt, double ball_radius,
                   double R) {
  constexpr std::size_t kPhases = 8;
  const auto su = setup(profile, opt);
  const bool ball = ball_radius > 0.0;
  const MollifierKernel k(ball ? dim : 1, opt.mollifier_a);
  const double smax = k.support();
  const double P = ball_radius + opt.N * R;
  const double x0 = ball ? std::max(0.0, P - R * smax - 2.0 * h) : -R * smax - 2.0 * h;
  const double x1 = ball ? P + R * smax + 2.0 * h : R * smax + 2.0 * h;
  const double dx = h / double(kPhases);
  const std::size_t n = std::size_t(std::ceil((x1 - x0) / dx)) + 1;
  std::vector<double> fine(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x0 + dx * double(i);
    const double v = su.psi(su.q * (ball ? ball_profile(k, R, P, x) : k.marginal_tail(x / R)));
    fine[i] = (1.0 - opt.a_shift) * v + opt.a_shift;
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> u;
  for (std::size_t ph = 0; ph < kPhases; ++ph) {
    u.clear();
    for (std::size_t i = ph; i < n; i += kPhases) u.push_back(fine[i]);
    best = std::min(best, profile_defect(u, h, x0 + dx * double(ph), ball ? dim : 1, ball, profile));
  }
  return best;
}

std::string describe_point(const GridSpec& g, std::size_t n) {
  const auto p = g.coord(n);
  std::ostringstream os;
  os << "(";
  for (int a = 0; a < g.dim; ++a) os << (a ? ", " : "") << p[a];
  os << ")";
  return os.str();
}

void verify(InitialDatum& d, const IgnitionProfile& profile, double tol) {
  d.min_defect = subsolution_defect(d.field, profile, &d.worst_index);
  if (d.min_defect < -tol) {
    std::ostringstream os;
    os << "initial datum: sub-solution check failed, min of Laplacian + F0 = " << d.min_defect
       << " at grid point " << describe_point(d.field.grid, d.worst_index) << " (grid under-resolved or R too small)";
    throw ConstructionError(os.str());
  }
}

void shift(ScalarField& f, double a) {
  if (a == 0.0) return;
  for (auto& v : f.values) v = (1.0 - a) * v + a;
}

// FFT convolution of a mask with the sampled radial kernel; zero padding on the high side.
std::vector<double> fft_convolve(const GridSpec& g, const Mask& m, const MollifiedBump& bump) {
  const int d = g.dim;
  const long kr = long(std::ceil(bump.support() / g.h));
  std::array<int, 3> L{1, 1, 1};
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) {
    L[a] = int(g.shape[a]) + int(kr) + 1;
    total *= std::size_t(L[a]);
  }
  const int last = L[d - 1];
  const std::size_t chalf = total / std::size_t(last) * std::size_t(last / 2 + 1);
  double* in = fftw_alloc_real(total);
  double* ker = fftw_alloc_real(total);
  fftw_complex* fa = fftw_alloc_complex(chalf);
  fftw_complex* fb = fftw_alloc_complex(chalf);
  std::fill(in, in + total, 0.0);
  std::fill(ker, ker + total, 0.0);
  auto pidx = [&](long i, long j, long k) {
    std::size_t n = std::size_t(i);
    if (d > 1) n = n * std::size_t(L[1]) + std::size_t(j);
    if (d > 2) n = n * std::size_t(L[2]) + std::size_t(k);
    return n;
  };
  for (std::size_t n = 0; n < g.size(); ++n)
    if (m[n]) {
      const auto ijk = g.unravel(n);
      in[pidx(long(ijk[0]), long(ijk[1]), long(ijk[2]))] = 1.0;
    }
  double ksum = 0.0;
  const long r1 = d > 1 ? kr : 0, r2 = d > 2 ? kr : 0;
  for (long i = -kr; i <= kr; ++i)
    for (long j = -r1; j <= r1; ++j)
      for (long k = -r2; k <= r2; ++k) {
        const double r = g.h * std::sqrt(double(i * i + j * j + k * k));
        const double v = bump(r);
        if (v == 0.0) continue;
        ksum += v;
        ker[pidx((i + L[0]) % L[0], (j + L[1]) % L[1], (k + L[2]) % L[2])] = v;
      }
  for (std::size_t n = 0; n < total; ++n) ker[n] /= ksum;
  fftw_plan pa = fftw_plan_dft_r2c(d, L.data(), in, fa, FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_r2c(d, L.data(), ker, fb, FFTW_ESTIMATE);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t n = 0; n < chalf; ++n) {
    const std::complex<double> x(fa[n][0], fa[n][1]), y(fb[n][0], fb[n][1]);
    const auto z = x * y / double(total);
    fa[n][0] = z.real();
    fa[n][1] = z.imag();
  }
  fftw_plan pc = fftw_plan_dft_c2r(d, L.data(), fa, in, FFTW_ESTIMATE);
  fftw_execute(pc);
  std::vector<double> out(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    out[n] = std::clamp(in[pidx(long(ijk[0]), long(ijk[1]), long(ijk[2]))], 0.0, 1.0);
  }
  fftw_destroy_plan(pa);
  fftw_destroy_plan(pb);
  fftw_destroy_plan(pc);
  fftw_free(in);
  fftw_free(ker);
  fftw_free(fa);
  fftw_free(fb);
  return out;
}

}  // namespace

double minimal_mollifier_scale(const IgnitionProfile& profile, int dim, double h, const DatumOptions& opt,
                               double ball_radius) {
  const double target = -opt.tol / 4.0;
  auto passes = [&](double R) { return check_scale(profile, dim, h, opt, ball_radius, R) >= target; };
  const double Rmin = std::max(1.0, 4.0 * h / opt.mollifier_a);
  double lo = Rmin, hi = Rmin;
  if (!passes(hi)) {
    for (;;) {
      lo = hi;
      hi *= 1.25;
      if (hi > 1e5) throw ConstructionError("initial datum: no mollifier scale up to 1e5 passes the sub-solution check");
      if (passes(hi)) break;
    }
    while (hi / lo > 1.01) {
      const double mid = std::sqrt(lo * hi);
      (passes(mid) ? hi : lo) = mid;
    }
  }
  log_info("initial datum: mollifier scale R = " + std::to_string(hi));
  return hi;
}

InitialDatum build_halfspace_datum(const Point& e, double l, const IgnitionProfile& profile, const GridSpec& grid,
                                   const Frame& frame, const DatumOptions& opt) {
  const auto su = setup(profile, opt);
  InitialDatum out;
  out.theta_star = su.theta_star;
  out.a_shift = opt.a_shift;
  out.N = opt.N;
  out.mollifier_a = opt.mollifier_a;
  double en = 0.0;
  for (int a = 0; a < grid.dim; ++a) en += e[a] * e[a];
  en = std::sqrt(en);
  if (!(en > 0.0)) throw ConfigError("half-space datum: zero direction");
  const Point u{e[0] / en, e[1] / en, e[2] / en};
  out.S = HalfSpace{u, l};
  const double R = opt.R ? *opt.R : minimal_mollifier_scale(profile, grid.dim, grid.h, opt);
  if (grid.h > opt.mollifier_a * R / 4.0) throw ConfigError("half-space datum: grid does not resolve the bump scale (h > aR/4)");
  const MollifierKernel k(1, opt.mollifier_a);
  out.R = R;
  out.R0 = (opt.N + k.support()) * R;
  out.field = ScalarField(grid);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Point x = frame.map(grid.coord(n));
    double s = 0.0;
    for (int a = 0; a < grid.dim; ++a) s += x[a] * u[a];
    const double t = (s - l - opt.N * R) / R;
    out.field[n] = su.psi(su.q * k.marginal_tail(t));
  }
  shift(out.field, opt.a_shift);
  if (opt.verify) verify(out, profile, opt.tol);
  return out;
}

InitialDatum build_initial_datum(const SetDescriptor& S, const IgnitionProfile& profile, const GridSpec& grid,
                                 const DatumOptions& opt) {
  const auto su = setup(profile, opt);
  if (const auto* hs = std::get_if<HalfSpace>(&S)) return build_halfspace_datum(hs->normal, hs->offset, profile, grid, {}, opt);

  InitialDatum out;
  out.S = S;
  out.theta_star = su.theta_star;
  out.a_shift = opt.a_shift;
  out.N = opt.N;
  out.mollifier_a = opt.mollifier_a;
  if (std::holds_alternative<WholeSpace>(S)) {
    out.field = ScalarField(grid, su.q);
    shift(out.field, opt.a_shift);
    if (opt.verify) verify(out, profile, opt.tol);
    return out;
  }

  const Mask inside = rasterize(S, grid);
  if (std::none_of(inside.begin(), inside.end(), [](auto v) { return v != 0; }))
    throw ConfigError("initial datum: S does not intersect the grid");

  const auto* ball = std::get_if<Ball>(&S);
  for (int attempt = 0;; ++attempt) {
    double R = opt.R ? *opt.R : minimal_mollifier_scale(profile, grid.dim, grid.h, opt, ball ? ball->radius : -1.0);
    R *= std::pow(1.1, attempt);
    if (grid.h > opt.mollifier_a * R / 4.0)
      throw ConfigError("initial datum: grid does not resolve the bump scale (h > aR/4)");
    const MollifierKernel k(grid.dim, opt.mollifier_a);
    out.R = R;
    out.R0 = (opt.N + k.support()) * R;
    out.field = ScalarField(grid);
    if (ball) {
      const double P = ball->radius + opt.N * R;
      const double rmax = P + R * k.support();
      const double dr = std::min(grid.h, opt.mollifier_a * R / 8.0) / 2.0;
      const std::size_t nodes = std::size_t(std::ceil(rmax / dr)) + 3;
      std::vector<double> prof(nodes);
      for (std::size_t i = 0; i < nodes; ++i) prof[i] = ball_profile(k, R, P, dr * double(i));
      cardinal_cubic_b_spline<double> spl(prof.data(), prof.size(), 0.0, dr, 0.0, 0.0);
      const double rflat = P - R * k.support();
      for (std::size_t n = 0; n < grid.size(); ++n) {
        const Point x = grid.coord(n);
        double r2 = 0.0;
        for (int a = 0; a < grid.dim; ++a) r2 += (x[a] - ball->center[a]) * (x[a] - ball->center[a]);
        const double r = std::sqrt(r2);
        double v;
        if (r >= rmax)
          v = 0.0;
        else if (r <= rflat)
          v = 1.0;
        else
          v = std::clamp(spl(r), 0.0, 1.0);
        out.field[n] = su.psi(su.q * v);
      }
    } else {
      const auto dist = distance_to_mask(grid, inside);
      Mask grown(grid.size());
      for (std::size_t n = 0; n < grid.size(); ++n) grown[n] = dist[n] <= opt.N * R;
      const MollifiedBump bump(grid.dim, opt.mollifier_a, R);
      const auto conv = fft_convolve(grid, grown, bump);
      for (std::size_t n = 0; n < grid.size(); ++n)
        out.field[n] = dist[n] >= out.R0 ? 0.0 : inside[n] ? su.q : su.psi(su.q * conv[n]);
    }
    shift(out.field, opt.a_shift);
    if (!opt.verify) return out;
    try {
      verify(out, profile, opt.tol);
      return out;
    } catch (const ConstructionError&) {
      if (opt.R || attempt >= 4) throw;
      log_info("initial datum: grid check failed, enlarging R");
    }
  }
}

ScalarField step_datum(const SetDescriptor& S, const GridSpec& grid, double amplitude, const Frame& frame) {
  ScalarField f(grid);
  for (std::size_t n = 0; n < grid.size(); ++n) f[n] = contains(S, frame.map(grid.coord(n)), grid.dim) ? amplitude : 0.0;
  return f;
}

}  // namespace frontlab
