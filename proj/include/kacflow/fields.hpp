#pragma once

// Velocity fields: conditional Kac fields for the VE process X0 + K(t) and
// the mean-reverting process f(t) X0 + K_{g(t)}, diffusion and flow-matching
// baselines, the exact marginal field for finite-support targets and a Monte
// Carlo estimate of the squared velocity norm.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/kac1d.hpp"
#include "kacflow/rng.hpp"
#include "kacflow/schedule.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

inline constexpr double kDiffusionEpsilon = 1e-15;

namespace detail {

inline void check_same_dim(const Point& x, const Point& x0) {
  if (x.size() != x0.size()) {
    throw UsageError("dimension mismatch: x has " + std::to_string(x.size()) + " components, x0 has " +
                     std::to_string(x0.size()));
  }
}

}  // namespace detail

// Componentwise Kac velocity of X0 + K(t) given X0 = x0.
inline Point kac_cond_velocity(const KacParams& params, double t, const Point& x, const Point& x0) {
  detail::check_same_dim(x, x0);
  Point v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = kac1d::velocity(params, t, x[i] - x0[i]);
  return v;
}

// Velocity of f(t) X0 + K_{g(t)} given X0 = x0:
// f'(t) x0 + g'(t) v_K(g(t), x - f(t) x0).
inline Point meanrev_cond_velocity(const KacParams& params, const Schedule& schedule, double t,
                                   const Point& x, const Point& x0) {
  detail::check_same_dim(x, x0);
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("mean-reverting velocity requires t in (0, 1]");
  const double g = schedule.g(t);
  if (!(g > 0.0)) throw DomainError("schedule has g(t) = 0 at t > 0");
  const double f = schedule.f(t);
  const double df = schedule.df(t);
  const double dg = schedule.dg(t);
  Point v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[i] = df * x0[i] + dg * kac1d::velocity(params, g, x[i] - f * x0[i]);
  }
  return v;
}

// Reverse-time field -x / (2(1 - t)) of the heat flow from N(0, I) to a Dirac
// at 0. Throws TruncationError for t >= 1 - eps.
inline Point diffusion_reverse_velocity(double t, const Point& x, double eps = kDiffusionEpsilon) {
  if (!(t >= 0.0)) throw DomainError("diffusion velocity requires t >= 0");
  if (t >= 1.0 - eps) throw TruncationError("diffusion reverse velocity truncated at t >= 1 - eps");
  Point v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = -x[i] / (2.0 * (1.0 - t));
  return v;
}

// Forward probability-flow velocity of X0 + sigma B_t given X0 = x0:
// sigma^2 (x - x0) / (2t). Throws TruncationError for t < eps.
inline Point diffusion_cond_velocity(double t, const Point& x, const Point& x0, double sigma = 1.0,
                                     double eps = kDiffusionEpsilon) {
  detail::check_same_dim(x, x0);
  if (t < eps) throw TruncationError("diffusion conditional velocity truncated at t < eps");
  Point v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = sigma * sigma * (x[i] - x0[i]) / (2.0 * t);
  return v;
}

// Velocity of the interpolant (1 - t) X0 + t B1 given X0 = x0.
inline Point fm_cond_velocity(double t, const Point& x, const Point& x0) {
  detail::check_same_dim(x, x0);
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("flow-matching velocity requires t in (0, 1]");
  Point v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = -x0[i] + (x[i] - (1.0 - t) * x0[i]) / t;
  return v;
}

// Forward Kac process: VE is X0 + K(t); VP is f(t) X0 + K_{g(t)}.
struct KacProcessSpec {
  enum class Kind { ve, vp };
  Kind kind = Kind::ve;
  KacParams params;
  Schedule schedule = Schedule::linear_t();

  static KacProcessSpec ve(KacParams p) { return {Kind::ve, p, Schedule::linear_t()}; }
  static KacProcessSpec vp(KacParams p, Schedule s) { return {Kind::vp, p, std::move(s)}; }

  double noise_time(double t) const { return kind == Kind::ve ? t : schedule.g(t); }
  double shrink(double t) const { return kind == Kind::ve ? 1.0 : schedule.f(t); }

  Point cond_velocity(double t, const Point& x, const Point& x0) const {
    return kind == Kind::ve ? kac_cond_velocity(params, t, x, x0)
                            : meanrev_cond_velocity(params, schedule, t, x, x0);
  }
};

// Exact marginal velocity for a finite-support target: the posterior-weighted
// average of the conditional fields, weights proportional to w_j u_t(x | x0_j)
// with u_t the product of 1D continuous Kac densities. Atoms are excluded, so
// the result is valid off the measure-zero set where a coordinate sits on a
// shifted boundary.
inline Point marginal_velocity_exact(const TargetSpec& target, const KacProcessSpec& process, double t,
                                     const Point& x) {
  if (target.kind() != TargetSpec::Kind::empirical) {
    throw UsageError("exact marginal velocity needs an empirical (finite-support) target");
  }
  target.check_dim(x);
  const double s = process.noise_time(t);
  if (!(t > 0.0) || !(s > 0.0)) throw DomainError("marginal velocity requires positive noise time");
  const double f = process.shrink(t);
  const auto& pts = target.points();
  const auto& w = target.weights();
  std::vector<double> logw(pts.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    double lw = std::log(w[j]);
    for (std::size_t i = 0; i < x.size() && std::isfinite(lw); ++i) {
      lw += kac1d::log_density_cont(process.params, s, x[i] - f * pts[j][i]);
    }
    logw[j] = lw;
    best = std::max(best, lw);
  }
  if (!std::isfinite(best)) {
    throw DomainError("point lies outside the effective support of every conditional law");
  }
  Point v(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double wj = std::exp(logw[j] - best);
    if (wj == 0.0) continue;
    const Point vj = process.cond_velocity(t, x, pts[j]);
    for (std::size_t i = 0; i < x.size(); ++i) v[i] += wj * vj[i];
    total += wj;
  }
  for (double& vi : v) vi /= total;
  return v;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Monte Carlo estimate of E_{x ~ mu_t} |v_t(x)|^2 with its standard error.
inline MonteCarloEstimate velocity_norm_mc(const std::function<Point(const Point&)>& field,
                                           const std::function<Point(RngStream&)>& sampler, std::size_t n,
                                           RngStream& rng) {
  if (n < 1000) throw UsageError("velocity norm estimate needs n >= 1000 samples");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Point v = field(sampler(rng));
    double sq = 0.0;
    for (double vi : v) sq += vi * vi;
    const double delta = sq - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (sq - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace kacflow
