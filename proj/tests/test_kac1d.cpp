#include "kacflow/kac1d.hpp"

#include <cmath>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace kacflow {
namespace {

const KacParams kUnit{1.0, 1.0};

TEST(KacParams, RejectsNonPositive) {
  EXPECT_THROW(KacParams(0.0, 1.0), DomainError);
  EXPECT_THROW(KacParams(1.0, -1.0), DomainError);
  EXPECT_THROW(KacParams(INFINITY, 1.0), DomainError);
  EXPECT_NO_THROW(KacParams(900.0, 30.0));
}

TEST(AtomWeight, Values) {
  EXPECT_NEAR(kac1d::atom_weight(kUnit, 1.0), 0.18393972058572117, 1e-16);
  EXPECT_NEAR(kac1d::atom_weight(kUnit, 1e-12), 0.5, 1e-12);
  double prev = 1.0;
  for (double a : {0.1, 1.0, 10.0, 100.0}) {
    const double w = kac1d::atom_weight({a, 1.0}, 1.0);
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_THROW(kac1d::atom_weight(kUnit, 0.0), DomainError);
  EXPECT_THROW(kac1d::atom_weight(kUnit, -1.0), DomainError);
}

TEST(DensityCont, ValueAtOrigin) {
  const long double oracle = 0.5L * std::exp(-1.0L) * (oracle::bessel_i(1, 1) + oracle::bessel_i(0, 1));
  EXPECT_NEAR(kac1d::density_cont(kUnit, 1.0, 0.0), static_cast<double>(oracle), 1e-15);
  EXPECT_NEAR(kac1d::density_cont(kUnit, 1.0, 0.0), 0.336835, 1e-6);
}

TEST(DensityCont, ZeroOutsideSupport) {
  EXPECT_EQ(kac1d::density_cont(kUnit, 1.0, 1.5), 0.0);
  EXPECT_EQ(kac1d::density_cont({3.0, 2.0}, 0.5, -1.0000001), 0.0);
  EXPECT_THROW(kac1d::density_cont(kUnit, 0.0, 0.0), DomainError);
}

TEST(DensityCont, MatchesUnscaledOracle) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {0.5, 2, 3}, {25, 5, 1}, {5, 0.5, 0.1}, {900, 30, 1}}) {
    const KacParams p{a, c};
    for (double frac : {0.0, 0.1, 0.5, 0.9, 0.999, 1.0}) {
      const double x = frac * c * t;
      const long double want = oracle::kac_density(a, c, t, x);
      // Deep in the tail the value underflows double; compare logs there.
      if (want > 1e-300L) {
        EXPECT_NEAR(kac1d::density_cont(p, t, x) / static_cast<double>(want), 1.0, 1e-11)
            << a << " " << c << " " << t << " " << x;
      }
      EXPECT_NEAR(kac1d::log_density_cont(p, t, x), static_cast<double>(std::log(want)), 1e-10);
    }
  }
}

TEST(DensityCont, SymmetricAndNonnegative) {
  const KacParams p{3.0, 2.0};
  for (int i = 0; i <= 50; ++i) {
    const double x = 2.0 * i / 50.0;
    EXPECT_GE(kac1d::density_cont(p, 1.0, x), 0.0);
    EXPECT_EQ(kac1d::density_cont(p, 1.0, x), kac1d::density_cont(p, 1.0, -x));
  }
}

TEST(DensityCont, IntegratesToOneMinusAtoms) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {0.5, 2, 3}, {25, 5, 1}, {5, 0.5, 0.1}}) {
    const double ct = c * t;
    const double mass = oracle::tanh_sinh(
        [&](double x) { return static_cast<double>(oracle::kac_density(a, c, t, x)); }, -ct, ct);
    EXPECT_NEAR(mass, 1.0 - std::exp(-a * t), 1e-10);
    EXPECT_NEAR(2.0 * kac1d::half_mass_to({a, c}, t, ct), mass, 1e-10);
  }
}

TEST(SignedDensities, AverageEqualsDensity) {
  const KacParams p{2.0, 1.5};
  const double t = 0.8;
  const double ct = p.c * t;
  for (int i = -20; i <= 20; ++i) {
    const double x = ct * i / 20.0;
    const auto s = kac1d::densities_signed(p, t, x);
    EXPECT_NEAR(0.5 * (s.plus + s.minus) - kac1d::density_cont(p, t, x), 0.0, 1e-14);
  }
  const auto origin = kac1d::densities_signed(p, t, 0.0);
  EXPECT_EQ(origin.plus, origin.minus);
  EXPECT_EQ(origin.plus, kac1d::density_cont(p, t, 0.0));
  EXPECT_THROW(kac1d::densities_signed(p, t, 1.01 * ct), DomainError);
}

TEST(SignedDensities, BoundaryLimits) {
  // r -> 0 at x = ct: I1(beta r)/r -> beta/2 and I0 -> 1, so
  // u- -> e^{-at} beta / 2 and u+ -> e^{-at} beta (1 + at) / 2.
  const KacParams p{2.0, 1.5};
  const double t = 0.8;
  const double ct = p.c * t;
  const double e = std::exp(-p.a * t);
  const auto s = kac1d::densities_signed(p, t, ct);
  EXPECT_NEAR(s.minus, 0.5 * e * p.beta(), 1e-15);
  EXPECT_NEAR(s.plus, 0.5 * e * p.beta() * (1.0 + p.a * t), 1e-15);
  const auto near = kac1d::densities_signed(p, t, ct * (1 - 1e-9));
  EXPECT_NEAR(near.minus, s.minus, 1e-8);
}

TEST(Flux, OracleValueAndSymmetry) {
  const double r = std::sqrt(0.75);
  const long double oracle = 0.5L * std::exp(-1.0L) * 0.5L * oracle::bessel_i(1, r) / r;
  EXPECT_NEAR(kac1d::flux(kUnit, 1.0, 0.5).value, static_cast<double>(oracle), 1e-15);
  EXPECT_EQ(kac1d::flux(kUnit, 1.0, 0.0).value, 0.0);
  const KacParams p{4.0, 2.0};
  for (double x : {0.1, 0.7, 1.3, 1.99}) {
    EXPECT_EQ(kac1d::flux(p, 1.0, x).value, -kac1d::flux(p, 1.0, -x).value);
  }
  EXPECT_THROW(kac1d::flux(kUnit, 1.0, 1.0), DomainError);
}

TEST(Flux, EqualsHalfSpeedTimesSignedDifference) {
  const KacParams p{4.0, 2.0};
  for (double x : {-1.5, -0.2, 0.4, 1.9}) {
    const auto s = kac1d::densities_signed(p, 1.0, x);
    EXPECT_NEAR(kac1d::flux(p, 1.0, x).value, 0.5 * p.c * (s.plus - s.minus), 1e-12);
  }
}

TEST(Velocity, ExampleValueAndFluxRatio) {
  const double v = kac1d::velocity(kUnit, 1.0, 0.5);
  const double r = std::sqrt(0.75);
  const long double series = 0.5L / (1 + r * oracle::bessel_i(0, r) / oracle::bessel_i(1, r));
  EXPECT_NEAR(v, static_cast<double>(series), 1e-14);
  EXPECT_NEAR(v, 0.157, 5e-4);
  EXPECT_NEAR(v, kac1d::flux(kUnit, 1.0, 0.5).value / kac1d::density_cont(kUnit, 1.0, 0.5), 1e-14);
}

TEST(Velocity, AtomsAndOutside) {
  const KacParams p{3.0, 2.0};
  const double t = 0.7;
  const double ct = p.c * t;
  EXPECT_EQ(kac1d::velocity(p, t, 0.0), 0.0);
  EXPECT_EQ(kac1d::velocity(p, t, ct), p.c);
  EXPECT_EQ(kac1d::velocity(p, t, -ct), -p.c);
  EXPECT_EQ(kac1d::velocity(p, t, 5.0 * ct), p.c);
  EXPECT_EQ(kac1d::velocity(p, t, -5.0 * ct), -p.c);
  // Interior limit at the boundary is ct / (t + 2/a), strictly below c.
  const double inner = kac1d::velocity(p, t, std::nextafter(ct, 0.0));
  EXPECT_NEAR(inner, ct / (t + 2.0 / p.a), 1e-9);
  EXPECT_LT(inner, p.c);
  EXPECT_THROW(kac1d::velocity(p, 0.0, 0.1), DomainError);
}

TEST(Velocity, BoundedOddAndMatchesOracle) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {25, 5, 1}, {0.1, 1, 1}, {100, 1, 1}, {900, 30, 1}, {5, 2, 1e-3}}) {
    const KacParams p{a, c};
    const double ct = c * t;
    for (int i = -40; i <= 40; ++i) {
      const double x = 1.2 * ct * i / 40.0;
      const double v = kac1d::velocity(p, t, x);
      EXPECT_LE(std::abs(v), c);
      EXPECT_EQ(v, -kac1d::velocity(p, t, -x));
      if (std::abs(x) < ct && a * t < 5000) {
        EXPECT_NEAR(v, static_cast<double>(oracle::kac_velocity(a, c, t, x)), 1e-12 * c)
            << a << " " << c << " " << t << " " << x;
      }
    }
  }
}

TEST(Cdf, AtomJumpsAndSymmetry) {
  const double w = kac1d::atom_weight(kUnit, 1.0);
  EXPECT_EQ(kac1d::cdf(kUnit, 1.0, 0.0), 0.5);
  EXPECT_EQ(kac1d::cdf(kUnit, 1.0, std::nextafter(-1.0, -2.0)), 0.0);
  EXPECT_EQ(kac1d::cdf(kUnit, 1.0, -1.0), w);
  EXPECT_EQ(kac1d::cdf(kUnit, 1.0, 1.0), 1.0);
  EXPECT_NEAR(kac1d::cdf(kUnit, 1.0, std::nextafter(1.0, 0.0)), 1.0 - w, 1e-10);
  EXPECT_NEAR(kac1d::cdf(kUnit, 1.0, std::nextafter(-1.0, 0.0)), w, 1e-10);
  EXPECT_NEAR(kac1d::cdf(kUnit, 1.0, 0.3) + kac1d::cdf(kUnit, 1.0, -0.3), 1.0, 1e-14);
  EXPECT_THROW(kac1d::cdf(kUnit, -1.0, 0.0), DomainError);
}

TEST(Cdf, MatchesOracleIntegral) {
  const double a = 2.0, c = 1.5, t = 0.9;
  const KacParams p{a, c};
  const double w = 0.5 * std::exp(-a * t);
  for (double x : {-1.2, -0.6, 0.05, 0.77, 1.3}) {
    const double want = w + oracle::tanh_sinh(
        [&](double y) { return static_cast<double>(oracle::kac_density(a, c, t, y)); }, -c * t, x);
    EXPECT_NEAR(kac1d::cdf(p, t, x), want, 1e-10) << x;
  }
}

TEST(InvCdf, ExampleValues) {
  EXPECT_EQ(kac1d::inv_cdf(kUnit, 1.0, 0.5), 0.0);
  EXPECT_EQ(kac1d::inv_cdf(kUnit, 1.0, 0.1), -1.0);
  EXPECT_EQ(kac1d::inv_cdf(kUnit, 1.0, 0.95), 1.0);
  EXPECT_EQ(kac1d::inv_cdf(kUnit, 1.0, 0.0), -1.0);
  EXPECT_EQ(kac1d::inv_cdf(kUnit, 1.0, 1.0), 1.0);
  EXPECT_THROW(kac1d::inv_cdf(kUnit, 1.0, 1.5), DomainError);
  EXPECT_THROW(kac1d::inv_cdf(kUnit, 1.0, -0.01), DomainError);
}

TEST(InvCdf, RoundTripOnContinuousRange) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {25, 5, 1}, {0.3, 2, 0.5}, {900, 30, 1}}) {
    const KacParams p{a, c};
    const KacLaw1D law(p, t);
    const double w = law.atom_weight();
    EXPECT_NEAR(law.tabulated_half_mass(), law.half_mass(), 1e-10);
    for (int i = 1; i < 100; ++i) {
      const double u = w + (1.0 - 2.0 * w) * i / 100.0;
      const double x = law.inv_cdf(u);
      EXPECT_LE(std::abs(x), c * t);
      EXPECT_NEAR(law.cdf(x), u, 1e-8) << a << " " << u;
      EXPECT_NEAR(kac1d::cdf(p, t, x), u, 1e-8);
    }
  }
}

TEST(InvCdf, MonotoneInLevel) {
  const KacLaw1D law({4.0, 1.0}, 1.0);
  double prev = -INFINITY;
  for (int i = 0; i <= 1000; ++i) {
    const double x = law.inv_cdf(i / 1000.0);
    EXPECT_GE(x, prev);
    prev = x;
  }
}

TEST(KacLaw1D, MassConservationGrid) {
  for (double a : {0.5, 1.0, 5.0, 25.0}) {
    for (double c : {0.5, 1.0, 2.0, 5.0}) {
      for (double t : {0.1, 1.0, 5.0}) {
        const KacParams p{a, c};
        const double mass = 2.0 * kac1d::atom_weight(p, t) + 2.0 * kac1d::half_mass_to(p, t, c * t);
        EXPECT_NEAR(mass, 1.0, 1e-8) << a << " " << c << " " << t;
      }
    }
  }
}

TEST(KacLaw1D, FluxEqualsVelocityTimesDensity) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {25, 5, 1}, {0.5, 2, 5}, {5, 0.5, 0.1}}) {
    const KacParams p{a, c};
    for (int i = -19; i <= 19; ++i) {
      const double x = c * t * i / 20.0;
      EXPECT_NEAR(kac1d::velocity(p, t, x) * kac1d::density_cont(p, t, x),
                  kac1d::flux(p, t, x).value, 1e-10);
    }
  }
}

// d/dt of int phi dmu_t against int phi' v dmu_t, atoms included.
double weak_residual(const KacParams& p, double t, double (*phi)(double), double (*dphi)(double)) {
  const auto integral = [&](double s) {
    const double cs = p.c * s;
    const double atoms = kac1d::atom_weight(p, s) * (phi(cs) + phi(-cs));
    return atoms + quad::integrate([&](double x) { return kac1d::density_cont(p, s, x) * phi(x); },
                                   -cs, cs, 1e-14).value;
  };
  const double h = 1e-4;
  const double lhs = (integral(t + h) - integral(t - h)) / (2.0 * h);
  const double ct = p.c * t;
  const double rhs =
      kac1d::atom_weight(p, t) * p.c * (dphi(ct) - dphi(-ct)) +
      quad::integrate([&](double x) { return kac1d::density_cont(p, t, x) * kac1d::velocity(p, t, x) * dphi(x); },
                      -ct, ct, 1e-14).value;
  return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-12);
}

double bump(double x) { return std::exp(-(x - 0.3) * (x - 0.3) / 0.5); }
double dbump(double x) { return -2.0 * (x - 0.3) / 0.5 * bump(x); }
double cubic_bump(double x) { return x * x * x * std::exp(-x * x); }
double dcubic_bump(double x) { return (3.0 * x * x - 2.0 * x * x * x * x) * std::exp(-x * x); }

TEST(KacLaw1D, WeakContinuityEquation) {
  for (auto [a, c, t] : std::vector<std::tuple<double, double, double>>{
           {1, 1, 1}, {25, 5, 0.3}, {0.5, 2, 0.7}, {5, 1, 2}}) {
    const KacParams p{a, c};
    EXPECT_LT(weak_residual(p, t, bump, dbump), 1e-4) << a << " " << c << " " << t;
    EXPECT_LT(weak_residual(p, t, cubic_bump, dcubic_bump), 1e-4) << a << " " << c << " " << t;
  }
}

}  // namespace
}  // namespace kacflow
