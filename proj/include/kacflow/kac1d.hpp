#pragma once

// Exact time-t law of the one-dimensional Kac process K(t) started at 0.
//
// The law has two atoms of weight e^{-at}/2 at -ct and +ct and a continuous
// part
//
//   u(t,x) = 1/2 e^{-at} ( beta ct I1(beta r)/r + beta I0(beta r) ),  |x| < ct,
//
// with r = sqrt(c^2 t^2 - x^2) and beta = a/c. The velocity field that
// transports this law is x / (t + (r/c) I0(beta r)/I1(beta r)) in the
// interior and +-c on the atoms.
//
// All evaluations go through the scaled Bessel functions:
// e^{-at} I(z) = e^{-(at - z)} [e^{-z} I(z)] with z = beta r <= at.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/quadrature.hpp"
#include "kacflow/specfun.hpp"

namespace kacflow {

// Damping a (1/time) and propagation speed c (space/time) of one component.
struct KacParams {
  double a = 1.0;
  double c = 1.0;

  KacParams() = default;
  KacParams(double damping, double speed) : a(damping), c(speed) {
    if (!(a > 0.0) || !(c > 0.0) || !std::isfinite(a) || !std::isfinite(c)) {
      throw DomainError("Kac parameters require finite a > 0 and c > 0");
    }
  }

  double beta() const { return a / c; }
  // Diffusive limit variance rate c^2/a.
  double sigma2() const { return c * c / a; }

  friend bool operator==(const KacParams&, const KacParams&) = default;
};

struct SignedDensities {
  double plus = 0.0;   // initially right-moving
  double minus = 0.0;  // initially left-moving
};

struct FluxValue {
  double value = 0.0;
};

namespace kac1d {

namespace detail {

inline void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("Kac law requires finite t > 0");
}

// r_t(x) = sqrt(c^2 t^2 - x^2), factored to avoid cancellation near |x| = ct.
inline double radius(double ct, double x) {
  const double ax = std::abs(x);
  if (ax >= ct) return 0.0;
  return std::sqrt((ct - ax) * (ct + ax));
}

// Pieces shared by density, signed densities and flux at an interior point.
struct Interior {
  double scale;      // 1/2 beta e^{-(at - z)}
  double i0e;        // e^{-z} I0(z)
  double i1e_over_z; // e^{-z} I1(z) / z
};

inline Interior interior(const KacParams& p, double t, double x) {
  const double beta = p.beta();
  const double z = beta * radius(p.c * t, x);
  const double at = p.a * t;
  return {0.5 * beta * std::exp(-(at - z)), specfun::bessel_i0e(z),
          specfun::bessel_i1e_over_z(z)};
}

}  // namespace detail

// Weight e^{-at}/2 of each boundary atom.
inline double atom_weight(const KacParams& p, double t) {
  detail::check_time(t);
  return 0.5 * std::exp(-p.a * t);
}

// Continuous part u(t,x); zero outside [-ct, ct], interior limit on the
// boundary.
inline double density_cont(const KacParams& p, double t, double x) {
  detail::check_time(t);
  const double ct = p.c * t;
  if (std::abs(x) > ct) return 0.0;
  const auto in = detail::interior(p, t, x);
  return in.scale * (p.beta() * ct * in.i1e_over_z + in.i0e);
}

// log u(t,x); -infinity outside the closed support.
inline double log_density_cont(const KacParams& p, double t, double x) {
  detail::check_time(t);
  const double ct = p.c * t;
  if (std::abs(x) > ct) return -std::numeric_limits<double>::infinity();
  const double beta = p.beta();
  const double z = beta * detail::radius(ct, x);
  return std::log(0.5 * beta) - (p.a * t - z) +
         std::log(beta * ct * specfun::bessel_i1e_over_z(z) + specfun::bessel_i0e(z));
}

// Continuous parts of the initially right- and left-moving processes.
inline SignedDensities densities_signed(const KacParams& p, double t, double x) {
  detail::check_time(t);
  const double ct = p.c * t;
  if (std::abs(x) > ct) throw DomainError("signed densities require |x| <= ct");
  const auto in = detail::interior(p, t, x);
  const double beta = p.beta();
  return {in.scale * (beta * (ct + x) * in.i1e_over_z + in.i0e),
          in.scale * (beta * (ct - x) * in.i1e_over_z + in.i0e)};
}

// Probability flux J = (c/2)(u+ - u-) of the continuous part.
inline FluxValue flux(const KacParams& p, double t, double x) {
  detail::check_time(t);
  if (!(std::abs(x) < p.c * t)) throw DomainError("flux requires |x| < ct");
  const auto in = detail::interior(p, t, x);
  return {in.scale * p.beta() * p.c * x * in.i1e_over_z};
}

// Velocity field transporting the Kac law. Outside the support the field is
// extended by c sign(x), which is continuous with the atom branch.
inline double velocity(const KacParams& p, double t, double x) {
  detail::check_time(t);
  const double ct = p.c * t;
  if (x >= ct) return p.c;
  if (x <= -ct) return -p.c;
  const double z = p.beta() * detail::radius(ct, x);
  return x / (t + specfun::bessel_z_ratio(z) / p.a);
}

// Mass of the continuous part on [0, x] for 0 <= x <= ct.
inline double half_mass_to(const KacParams& p, double t, double x, double abs_tol = 1e-12) {
  const auto f = [&](double y) { return density_cont(p, t, y); };
  return quad::integrate(f, 0.0, x, abs_tol).value;
}

// Right-continuous CDF of the full law, atoms included.
inline double cdf(const KacParams& p, double t, double x) {
  detail::check_time(t);
  const double ct = p.c * t;
  if (x < -ct) return 0.0;
  if (x >= ct) return 1.0;
  const double w = atom_weight(p, t);
  if (x == -ct) return w;
  if (x == 0.0) return 0.5;
  const double half = half_mass_to(p, t, std::abs(x));
  return x > 0.0 ? 0.5 + half : 0.5 - half;
}

}  // namespace kac1d

// The law of K(t) at a fixed time with a precomputed quantile table of the
// continuous part. Immutable after construction.
class KacLaw1D {
 public:
  static constexpr int kDefaultKnots = 4096;

  KacLaw1D(const KacParams& params, double t, int knots = kDefaultKnots)
      : params_(params), t_(t) {
    kac1d::detail::check_time(t);
    if (knots < 2) throw UsageError("quantile table needs at least 2 knots");
    radius_ = params.c * t;
    atom_weight_ = 0.5 * std::exp(-params.a * t);
    half_mass_ = 0.5 * -std::expm1(-params.a * t);
    knots_.resize(static_cast<std::size_t>(knots) + 1);
    cumulative_.resize(knots_.size());
    const auto f = [this](double y) { return density(y); };
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      knots_[k] = radius_ * static_cast<double>(k) / knots;
    }
    knots_.back() = radius_;
    cumulative_[0] = 0.0;
    for (std::size_t k = 1; k < knots_.size(); ++k) {
      cumulative_[k] = cumulative_[k - 1] + quad::integrate(f, knots_[k - 1], knots_[k], 1e-14).value;
    }
  }

  const KacParams& params() const { return params_; }
  double t() const { return t_; }
  double atom_weight() const { return atom_weight_; }
  double support_radius() const { return radius_; }
  // Mass of the continuous part on [0, ct], i.e. (1 - e^{-at})/2.
  double half_mass() const { return half_mass_; }
  // Tabulated mass on [0, ct]; agrees with half_mass() to quadrature accuracy.
  double tabulated_half_mass() const { return cumulative_.back(); }

  double density(double x) const { return kac1d::density_cont(params_, t_, x); }

  double cdf(double x) const {
    if (x < -radius_) return 0.0;
    if (x >= radius_) return 1.0;
    if (x == -radius_) return atom_weight_;
    const double h = half_mass_at(std::abs(x));
    return x >= 0.0 ? 0.5 + h : 0.5 - h;
  }

  // Generalized inverse inf{x : F(x) >= u}.
  double inv_cdf(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    if (u <= atom_weight_) return -radius_;
    if (u >= 1.0 - atom_weight_) return radius_;
    if (u == 0.5) return 0.0;
    const double x = half_quantile(std::abs(u - 0.5));
    return u > 0.5 ? x : -x;
  }

  // Quantile of |X| conditioned on the continuous part: returns x in [0, ct]
  // with P(|X| <= x | continuous) = v. This is the table lookup used by the
  // inverse-CDF sampler.
  double continuous_abs_quantile(double v) const {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    return half_quantile(v * cumulative_.back());
  }

 private:
  // Continuous mass on [0, x].
  double half_mass_at(double x) const {
    const auto k = panel_of(x);
    const auto f = [this](double y) { return density(y); };
    return cumulative_[k] + quad::integrate(f, knots_[k], x, 1e-14).value;
  }

  std::size_t panel_of(double x) const {
    const double pos = x / radius_ * static_cast<double>(knots_.size() - 1);
    auto k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(knots_.size() - 2)));
    while (k > 0 && knots_[k] > x) --k;
    while (k + 2 < knots_.size() && knots_[k + 1] <= x) ++k;
    return k;
  }

  // Solves H(x) = target for x in [0, ct] where H is the continuous mass on
  // [0, x]: monotone table lookup, linear interpolation, then safeguarded
  // Newton steps that fall back to bisection.
  double half_quantile(double target) const {
    if (target <= 0.0) return 0.0;
    if (target >= cumulative_.back()) return radius_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const std::size_t k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    double lo = knots_[k];
    double hi = knots_[k + 1];
    const double h_lo = cumulative_[k];
    const double h_hi = cumulative_[k + 1];
    double x = h_hi > h_lo ? lo + (hi - lo) * (target - h_lo) / (h_hi - h_lo) : 0.5 * (lo + hi);
    const auto f = [this](double y) { return density(y); };
    for (int iter = 0; iter < 100; ++iter) {
      const double residual = h_lo + quad::integrate(f, knots_[k], x, 1e-14).value - target;
      if (std::abs(residual) <= 1e-12) break;
      if (residual > 0.0) {
        hi = x;
      } else {
        lo = x;
      }
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * radius_) break;
      const double dens = density(x);
      double next = dens > 0.0 ? x - residual / dens : lo - 1.0;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      x = next;
    }
    return x;
  }

  KacParams params_;
  double t_;
  double radius_ = 0.0;
  double atom_weight_ = 0.0;
  double half_mass_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> cumulative_;
};

namespace kac1d {

// Generalized inverse CDF. Builds a one-off quantile table; construct a
// KacLaw1D directly when evaluating many quantiles at the same time.
inline double inv_cdf(const KacParams& p, double t, double u) {
  detail::check_time(t);
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  return KacLaw1D(p, t).inv_cdf(u);
}

}  // namespace kac1d
}  // namespace kacflow
