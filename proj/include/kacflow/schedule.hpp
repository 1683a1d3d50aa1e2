#pragma once

// Time schedules (f, g) of the mean-reverting process
// M_t = f(t) X0 + K_{g(t)} on [0, 1].

#include <cmath>
#include <functional>
#include <string>

#include "kacflow/error.hpp"

namespace kacflow {

class Schedule {
 public:
  enum class Kind { linear_t, linear_tsq, custom };
  using Fn = std::function<double(double)>;

  // (f, g) = (1 - t, t)
  static Schedule linear_t() {
    return Schedule(Kind::linear_t, [](double t) { return 1.0 - t; }, [](double t) { return t; },
                    [](double) { return -1.0; }, [](double) { return 1.0; }, 1.0, 1.0);
  }

  // (f, g) = (1 - t, t^2)
  static Schedule linear_tsq() {
    return Schedule(Kind::linear_tsq, [](double t) { return 1.0 - t; }, [](double t) { return t * t; },
                    [](double) { return -1.0; }, [](double t) { return 2.0 * t; }, 1.0, 2.0);
  }

  // Checks the endpoint conditions f(0)=1, f(1)=0, g(0)=0, g(1)=1.
  static Schedule custom(Fn f, Fn g, Fn df, Fn dg, double lipschitz_f, double lipschitz_g) {
    Schedule s(Kind::custom, std::move(f), std::move(g), std::move(df), std::move(dg), lipschitz_f,
               lipschitz_g);
    constexpr double tol = 1e-12;
    if (std::abs(s.f(0.0) - 1.0) > tol || std::abs(s.f(1.0)) > tol || std::abs(s.g(0.0)) > tol ||
        std::abs(s.g(1.0) - 1.0) > tol) {
      throw DomainError("schedule must satisfy f(0)=1, f(1)=0, g(0)=0, g(1)=1");
    }
    return s;
  }

  static Schedule from_name(const std::string& name) {
    if (name == "linear_t") return linear_t();
    if (name == "linear_tsq") return linear_tsq();
    throw UsageError("unknown schedule '" + name + "' (expected linear_t or linear_tsq)");
  }

  Kind kind() const { return kind_; }
  std::string name() const {
    switch (kind_) {
      case Kind::linear_t: return "linear_t";
      case Kind::linear_tsq: return "linear_tsq";
      case Kind::custom: return "custom";
    }
    return "custom";
  }

  double f(double t) const { return f_(t); }
  double g(double t) const { return g_(t); }
  double df(double t) const { return df_(t); }
  double dg(double t) const { return dg_(t); }
  double lipschitz_f() const { return lipschitz_f_; }
  double lipschitz_g() const { return lipschitz_g_; }

 private:
  Schedule(Kind kind, Fn f, Fn g, Fn df, Fn dg, double cf, double cg)
      : kind_(kind), f_(std::move(f)), g_(std::move(g)), df_(std::move(df)), dg_(std::move(dg)),
        lipschitz_f_(cf), lipschitz_g_(cg) {}

  Kind kind_;
  Fn f_, g_, df_, dg_;
  double lipschitz_f_;
  double lipschitz_g_;
};

}  // namespace kacflow
