#pragma once

// Flow-ODE integration x' = v(t, x): explicit Euler, classical RK4 and the
// Dormand-Prince 5(4) pair with PI step-size control.
//
// Backward integration from t_end down to t_start is carried out as forward
// integration in s = t_end - t of the reversed field -v(t_end - s, x); the
// recorded trajectory uses the original time t.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

using VectorField = std::function<Point(double, const Point&)>;

enum class SolverMethod { euler, rk4, rk45 };
enum class Direction { forward, backward };

inline SolverMethod parse_solver(const std::string& name) {
  if (name == "euler") return SolverMethod::euler;
  if (name == "rk4") return SolverMethod::rk4;
  if (name == "rk45") return SolverMethod::rk45;
  throw UsageError("unknown solver '" + name + "' (expected euler, rk4 or rk45)");
}

inline std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::euler: return "euler";
    case SolverMethod::rk4: return "rk4";
    case SolverMethod::rk45: return "rk45";
  }
  return "rk45";
}

struct SolverConfig {
  SolverMethod method = SolverMethod::rk45;
  int steps = 100;      // fixed-step methods
  double rtol = 1e-6;   // rk45
  double atol = 1e-6;   // rk45
  Direction direction = Direction::forward;
  double t_start = 0.0;
  double t_end = 1.0;
  bool record = true;   // keep every accepted step, else only the endpoints

  void validate() const {
    if (steps < 1) throw UsageError("solver steps must be at least 1");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw UsageError("solver tolerances must be positive");
    if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
      throw UsageError("solver needs finite t_start < t_end");
    }
  }
};

struct TrajectoryPoint {
  double t = 0.0;
  Point x;
};

namespace detail {

inline void axpy(Point& out, const Point& x, double h, const Point& k) {
  out.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + h * k[i];
}

inline void check_field_output(const Point& v, std::size_t d, double s) {
  if (v.size() != d) throw UsageError("velocity field returned the wrong dimension");
  for (double vi : v) {
    if (!std::isfinite(vi)) {
      std::ostringstream msg;
      msg << "velocity field returned a non-finite value at solver time " << s;
      throw NumericalError(msg.str());
    }
  }
}

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // Error weights: 5th-order minus embedded 4th-order coefficients.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Integrates x' = field(t, x) over [t_start, t_end] in the configured
// direction. Returns the trajectory including both endpoints.
inline std::vector<TrajectoryPoint> integrate(const VectorField& field, const Point& x0,
                                              const SolverConfig& config) {
  config.validate();
  const double range = config.t_end - config.t_start;
  const bool backward = config.direction == Direction::backward;
  const double origin = backward ? config.t_end : config.t_start;
  // Solver time s runs over [0, range].
  const auto time_of = [&](double s) { return backward ? config.t_end - s : config.t_start + s; };
  const std::size_t d = x0.size();
  const auto f = [&](double s, const Point& x) {
    Point v = field(time_of(s), x);
    detail::check_field_output(v, d, time_of(s));
    if (backward) {
      for (double& vi : v) vi = -vi;
    }
    return v;
  };

  std::vector<TrajectoryPoint> traj{{origin, x0}};
  Point x = x0;
  Point tmp;
  const auto record = [&](double s, bool last) {
    if (config.record || last) traj.push_back({last ? time_of(range) : time_of(s), x});
  };

  if (config.method != SolverMethod::rk45) {
    const double h = range / config.steps;
    for (int n = 0; n < config.steps; ++n) {
      const double s = n * h;
      const double step = n + 1 == config.steps ? range - s : h;
      const Point k1 = f(s, x);
      if (config.method == SolverMethod::euler) {
        detail::axpy(x, x, step, k1);
      } else {
        detail::axpy(tmp, x, 0.5 * step, k1);
        const Point k2 = f(s + 0.5 * step, tmp);
        detail::axpy(tmp, x, 0.5 * step, k2);
        const Point k3 = f(s + 0.5 * step, tmp);
        detail::axpy(tmp, x, step, k3);
        const Point k4 = f(s + step, tmp);
        for (std::size_t i = 0; i < d; ++i) x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      record(s + step, n + 1 == config.steps);
    }
    return traj;
  }

  using DP = detail::DormandPrince;
  constexpr double kSafety = 0.9, kAlpha = 0.17, kBeta = 0.04, kMinFactor = 0.2, kMaxFactor = 10.0;
  const double h_min = 1e-12 * range;
  double s = 0.0;
  double h = range / 100.0;
  double err_prev = 1e-4;
  Point k1 = f(0.0, x);
  Point k2, k3, k4, k5, k6, k7, y(d);
  tmp.resize(d);
  while (s < range) {
    bool last = false;
    if (s + h >= range) {
      h = range - s;
      last = true;
    }
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * DP::a21 * k1[i];
    k2 = f(s + DP::c2 * h, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * (DP::a31 * k1[i] + DP::a32 * k2[i]);
    k3 = f(s + DP::c3 * h, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
    k4 = f(s + DP::c4 * h, tmp);
    for (std::size_t i = 0; i < d; ++i) {
      tmp[i] = x[i] + h * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i]);
    }
    k5 = f(s + DP::c5 * h, tmp);
    for (std::size_t i = 0; i < d; ++i) {
      tmp[i] = x[i] + h * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] + DP::a64 * k4[i] +
                           DP::a65 * k5[i]);
    }
    k6 = f(s + h, tmp);
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = x[i] + h * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] + DP::b6 * k6[i]);
    }
    k7 = f(s + h, y);
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = h * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] +
                            DP::e6 * k6[i] + DP::e7 * k7[i]);
      const double scale = config.atol + config.rtol * std::max(std::abs(x[i]), std::abs(y[i]));
      err += (e / scale) * (e / scale);
    }
    err = std::sqrt(err / static_cast<double>(d));
    if (err <= 1.0) {
      s = last ? range : s + h;
      x = y;
      k1 = k7;
      record(s, last);
      double factor = err == 0.0 ? kMaxFactor
                                 : kSafety * std::pow(err, -kAlpha) * std::pow(err_prev, kBeta);
      factor = std::clamp(factor, kMinFactor, kMaxFactor);
      err_prev = std::max(err, 1e-4);
      h *= factor;
      if (last) break;
    } else {
      h *= std::max(kMinFactor, kSafety * std::pow(err, -kAlpha));
    }
    if (h < h_min && range - s > h_min) {
      std::ostringstream msg;
      msg << "adaptive step size underflow (h < " << h_min << ") at t = " << time_of(s);
      throw StiffnessError(msg.str(), time_of(s));
    }
  }
  return traj;
}

// Terminal state of the integration.
inline Point integrate_to_end(const VectorField& field, const Point& x0, SolverConfig config) {
  config.record = false;
  return integrate(field, x0, config).back().x;
}

}  // namespace kacflow
