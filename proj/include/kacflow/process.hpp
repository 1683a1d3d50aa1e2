#pragma once

// Stochastic simulation of the Kac process and the processes built from it:
// the random time tau_t, full paths, exact 1D draws, the componentwise VE
// process X0 + K(t), the mean-reverting process f(t) X0 + K_{g(t)} and a
// Brownian baseline.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/kac1d.hpp"
#include "kacflow/rng.hpp"
#include "kacflow/schedule.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

inline constexpr int kTauBuffer = 20;

namespace detail {

// Signed occupation time consuming Exp(a) waiting times in blocks of `block`
// draws; further blocks are drawn until the sum exceeds t. The block size only
// matters for the presampling layout, not for the value.
inline double simulate_tau_blocks(double a, double t, RngStream& rng, int block) {
  double tau = 0.0;
  double elapsed = 0.0;
  double sign = 1.0;
  std::vector<double> waits(static_cast<std::size_t>(block));
  for (;;) {
    for (double& s : waits) s = rng.exponential(a);
    for (double s : waits) {
      if (elapsed + s > t) return tau + sign * (t - elapsed);
      tau += sign * s;
      elapsed += s;
      sign = -sign;
    }
  }
}

}  // namespace detail

// Signed occupation time tau_t = int_0^t (-1)^{N(s)} ds of a Poisson(a)
// switching process. Waiting times are presampled in blocks of
// ceil(2 a horizon) + 20; a block that falls short is followed by another,
// so the result is never truncated.
inline double simulate_tau(double a, double t, RngStream& rng, double horizon = -1.0) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("simulate_tau requires a > 0");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("simulate_tau requires t >= 0");
  if (horizon < t) horizon = t;
  const auto block = static_cast<int>(std::ceil(2.0 * a * horizon)) + kTauBuffer;
  return detail::simulate_tau_blocks(a, t, rng, block);
}

// One realization of the Kac process on [0, T] started at 0.
class KacPath {
 public:
  KacPath(KacParams params, double initial_sign, std::vector<double> jump_times, double horizon)
      : params_(params), initial_sign_(initial_sign), jump_times_(std::move(jump_times)),
        horizon_(horizon) {
    anchors_.reserve(jump_times_.size());
    double last = 0.0;
    double pos = 0.0;
    double dir = initial_sign_;
    for (double s : jump_times_) {
      pos += dir * params_.c * (s - last);
      anchors_.push_back(pos);
      last = s;
      dir = -dir;
    }
  }

  const KacParams& params() const { return params_; }
  double initial_sign() const { return initial_sign_; }
  const std::vector<double>& jump_times() const { return jump_times_; }
  double horizon() const { return horizon_; }

  double position(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) throw DomainError("path time outside [0, T]");
    const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
    const auto k = static_cast<std::size_t>(it - jump_times_.begin());
    const double start = k == 0 ? 0.0 : jump_times_[k - 1];
    const double pos = k == 0 ? 0.0 : anchors_[k - 1];
    return pos + velocity_after(k) * (t - start);
  }

  // Velocity +-c on the open segment containing t (right derivative).
  double velocity(double t) const {
    const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
    return velocity_after(static_cast<std::size_t>(it - jump_times_.begin()));
  }

 private:
  double velocity_after(std::size_t jumps) const {
    return (jumps % 2 == 0 ? initial_sign_ : -initial_sign_) * params_.c;
  }

  KacParams params_;
  double initial_sign_;
  std::vector<double> jump_times_;
  double horizon_;
  std::vector<double> anchors_;  // position at each jump time
};

inline KacPath simulate_path(const KacParams& params, double horizon, RngStream& rng) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("path horizon must be positive");
  const double sign = rng.sign();
  std::vector<double> jumps;
  double s = rng.exponential(params.a);
  while (s <= horizon) {
    jumps.push_back(s);
    s += rng.exponential(params.a);
  }
  return KacPath(params, sign, std::move(jumps), horizon);
}

// Sampled Brownian path on the uniform grid 0, dt, ..., with the final point
// at T. Returns one row of d coordinates per grid time.
inline std::vector<Point> simulate_brownian_path(double sigma, double horizon, double dt, std::size_t d,
                                                 RngStream& rng) {
  if (!(sigma > 0.0) || !(horizon > 0.0) || !(dt > 0.0)) {
    throw DomainError("Brownian path requires sigma, T, dt > 0");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<Point> out(steps + 1, Point(d, 0.0));
  double prev = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double tk = std::min(horizon, static_cast<double>(k) * dt);
    const double scale = sigma * std::sqrt(tk - prev);
    for (std::size_t i = 0; i < d; ++i) out[k][i] = out[k - 1][i] + scale * rng.normal();
    prev = tk;
  }
  return out;
}

enum class KacSampler { icdf, walk };

inline KacSampler parse_sampler(const std::string& name) {
  if (name == "icdf") return KacSampler::icdf;
  if (name == "walk") return KacSampler::walk;
  throw UsageError("unknown sampling method '" + name + "' (expected icdf or walk)");
}

// One draw of K(t) by the inverse-CDF rule: an atom at +-ct with probability
// e^{-at}, otherwise a symmetric continuous quantile.
inline double sample_kac_icdf(const KacLaw1D& law, RngStream& rng) {
  const double u = rng.uniform();
  const double sign = rng.sign();
  if (u < 2.0 * law.atom_weight()) return sign * law.support_radius();
  return sign * law.continuous_abs_quantile(rng.uniform());
}

// One draw of K(t) = B c tau_t from the random walk.
inline double sample_kac_walk(const KacParams& params, double t, RngStream& rng) {
  const double sign = rng.sign();
  return sign * params.c * simulate_tau(params.a, t, rng);
}

inline std::vector<double> sample_kac(const KacParams& params, double t, std::size_t n, RngStream& rng,
                                      KacSampler method = KacSampler::icdf) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("sample_kac requires t > 0");
  if (n < 1) throw UsageError("sample count must be at least 1");
  std::vector<double> out(n);
  if (method == KacSampler::icdf) {
    const KacLaw1D law(params, t);
    for (double& v : out) v = sample_kac_icdf(law, rng);
  } else {
    for (double& v : out) v = sample_kac_walk(params, t, rng);
  }
  return out;
}

enum class ProcessKind { ve, vp, brownian };

struct ProcessSample {
  Point values;
  double t = 0.0;
  ProcessKind kind = ProcessKind::ve;
};

namespace detail {

// Adds an independent K(s) draw to every coordinate of every point.
inline void add_kac_noise(std::vector<ProcessSample>& out, const KacParams& params, double s,
                          RngStream& rng, KacSampler method) {
  if (s <= 0.0) return;
  if (method == KacSampler::icdf) {
    const KacLaw1D law(params, s);
    for (auto& p : out) {
      for (double& v : p.values) v += sample_kac_icdf(law, rng);
    }
  } else {
    for (auto& p : out) {
      for (double& v : p.values) v += sample_kac_walk(params, s, rng);
    }
  }
}

inline void check_count_and_dim(const TargetSpec& target, std::size_t n, std::size_t d) {
  if (n < 1) throw UsageError("sample count must be at least 1");
  if (d != 0 && d != target.dim()) {
    throw UsageError("requested dimension " + std::to_string(d) + " does not match target dimension " +
                     std::to_string(target.dim()));
  }
}

}  // namespace detail

// X_t = X0 + K(t) with independent Kac components. d = 0 means the target's
// dimension.
inline std::vector<ProcessSample> sample_ve(const TargetSpec& target, const KacParams& params, double t,
                                            std::size_t n, RngStream& rng,
                                            KacSampler method = KacSampler::icdf, std::size_t d = 0) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("sample_ve requires t >= 0");
  detail::check_count_and_dim(target, n, d);
  std::vector<ProcessSample> out(n);
  for (auto& p : out) p = {target.sample(rng), t, ProcessKind::ve};
  detail::add_kac_noise(out, params, t, rng, method);
  return out;
}

// M_t = f(t) X0 + K_{g(t)} componentwise.
inline std::vector<ProcessSample> sample_vp(const TargetSpec& target, const KacParams& params,
                                            const Schedule& schedule, double t, std::size_t n,
                                            RngStream& rng, KacSampler method = KacSampler::icdf,
                                            std::size_t d = 0) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("sample_vp requires t in [0, 1]");
  detail::check_count_and_dim(target, n, d);
  const double f = schedule.f(t);
  std::vector<ProcessSample> out(n);
  for (auto& p : out) {
    p = {target.sample(rng), t, ProcessKind::vp};
    for (double& v : p.values) v *= f;
  }
  detail::add_kac_noise(out, params, schedule.g(t), rng, method);
  return out;
}

// i.i.d. N(0, sigma^2 t I_d).
inline std::vector<ProcessSample> sample_brownian(double sigma, double t, std::size_t n, std::size_t d,
                                                  RngStream& rng) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("Brownian sigma must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("Brownian time must be nonnegative");
  if (n < 1 || d < 1) throw UsageError("sample count and dimension must be at least 1");
  const double scale = sigma * std::sqrt(t);
  std::vector<ProcessSample> out(n);
  for (auto& p : out) {
    p = {Point(d), t, ProcessKind::brownian};
    for (double& v : p.values) v = scale * rng.normal();
  }
  return out;
}

}  // namespace kacflow
