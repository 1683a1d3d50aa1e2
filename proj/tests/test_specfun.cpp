#include "kacflow/specfun.hpp"

#include <cmath>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

namespace kacflow::specfun {
namespace {

// Extended-precision oracles, independent of the double implementation.
long double series_i0_ld(long double z) {
  const long double q = z * z / 4;
  long double term = 1, sum = 1;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
  }
  return sum;
}

long double series_i1_ld(long double z) {
  const long double q = z * z / 4;
  long double term = z / 2, sum = z / 2;
  for (int k = 1; k < 400; ++k) {
    term *= q / (static_cast<long double>(k) * (k + 1));
    sum += term;
  }
  return sum;
}

long double reference_i0e(long double z) {
  return boost::math::cyl_bessel_i(0, z) * std::exp(-z);
}
long double reference_i1e(long double z) {
  return boost::math::cyl_bessel_i(1, z) * std::exp(-z);
}

double rel_err(double got, long double want) {
  return static_cast<double>(std::fabs((got - want) / want));
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
  }
  return z;
}

TEST(BesselI0e, ValueAtZeroIsOne) { EXPECT_EQ(bessel_i0e(0.0), 1.0); }

TEST(BesselI0e, MatchesSeriesAtOne) {
  // I0(1) = 1.2660658777520084 (series with 400 terms in long double).
  EXPECT_NEAR(static_cast<double>(series_i0_ld(1.0L)), 1.2660658777520084, 1e-16);
  EXPECT_LT(rel_err(bessel_i0e(1.0), 1.2660658777520084L * std::exp(-1.0L)), 1e-12);
  EXPECT_NEAR(bessel_i0e(1.0), 0.4657596, 1e-7);
}

TEST(BesselI0e, MatchesAsymptoticAtFifty) {
  const double z = 50.0;
  // 1/sqrt(2 pi z) * (1 + 1/(8z) + 9/(2 (8z)^2) + 225/(6 (8z)^3) + ...)
  long double sum = 0, term = 1;
  for (int k = 0; k < 30; ++k) {
    sum += term;
    term *= static_cast<long double>((2 * k + 1) * (2 * k + 1)) / (8.0L * (k + 1) * z);
  }
  const long double oracle = sum / std::sqrt(2.0L * 3.14159265358979323846L * z);
  const double v = bessel_i0e(z);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 0.06);
  EXPECT_LT(rel_err(v, oracle), 1e-10);
}

TEST(BesselI1e, ValueAtZeroIsZero) { EXPECT_EQ(bessel_i1e(0.0), 0.0); }

TEST(BesselI1e, MatchesSeriesAtTwo) {
  EXPECT_NEAR(static_cast<double>(series_i1_ld(2.0L)), 1.5906368546373291, 1e-15);
  EXPECT_LT(rel_err(bessel_i1e(2.0), 1.5906368546373291L * std::exp(-2.0L)), 1e-12);
}

TEST(BesselI1e, BelowI0eForPositiveArguments) {
  for (double z : log_grid(1e-8, 1e6, 120)) EXPECT_LT(bessel_i1e(z), bessel_i0e(z)) << z;
}

TEST(Bessel, RejectsBadArguments) {
  EXPECT_THROW(bessel_i0e(-1e-300), DomainError);
  EXPECT_THROW(bessel_i1e(-1.0), DomainError);
  EXPECT_THROW(bessel_i0e(std::nan("")), DomainError);
  EXPECT_THROW(bessel_i0e(INFINITY), DomainError);
  EXPECT_THROW(bessel_ratio_i0_over_i1(0.0), DomainError);
  EXPECT_THROW(bessel_ratio_i0_over_i1(-2.0), DomainError);
}

TEST(Bessel, ExtendedPrecisionReferenceOnLogGrid) {
  for (double z : log_grid(1e-8, 1e4, 200)) {
    EXPECT_LT(rel_err(bessel_i0e(z), reference_i0e(z)), 1e-12) << "i0e z=" << z;
    EXPECT_LT(rel_err(bessel_i1e(z), reference_i1e(z)), 1e-12) << "i1e z=" << z;
  }
}

TEST(Bessel, SeriesAndAsymptoticAgreeOnOverlap) {
  for (double z : log_grid(15.0, 20.0, 40)) {
    EXPECT_LT(std::abs(series_i0e(z) / asymptotic_i0e(z) - 1.0), 1e-10) << z;
    EXPECT_LT(std::abs(series_i1e(z) / asymptotic_i1e(z) - 1.0), 1e-10) << z;
  }
}

TEST(Bessel, FiniteForHugeArguments) {
  for (double z : {1e5, 1e6, 1e8}) {
    const double i0 = bessel_i0e(z);
    const double i1 = bessel_i1e(z);
    EXPECT_TRUE(std::isfinite(i0) && std::isfinite(i1));
    EXPECT_GT(i0, 0.0);
    EXPECT_NEAR(i0 * std::sqrt(2.0 * M_PI * z), 1.0, 1e-4);
  }
}

TEST(Bessel, ScaledI0DecreasingAndI1Unimodal) {
  const auto grid = log_grid(1e-6, 1e6, 400);
  int direction_changes = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_LT(bessel_i0e(grid[i]), bessel_i0e(grid[i - 1]));
    if (i >= 2) {
      const bool up_before = bessel_i1e(grid[i - 1]) > bessel_i1e(grid[i - 2]);
      const bool up_now = bessel_i1e(grid[i]) > bessel_i1e(grid[i - 1]);
      if (up_before != up_now) ++direction_changes;
    }
  }
  EXPECT_EQ(direction_changes, 1);
  EXPECT_NEAR(bessel_i1e(1e6) * std::sqrt(2.0 * M_PI * 1e6), 1.0, 1e-5);
}

TEST(Bessel, DerivativeOfI0IsI1) {
  // Central differences of the extended-precision series.
  const long double h = 1e-4L;
  for (long double z : {0.1L, 0.5L, 1.0L, 3.0L, 7.5L, 15.0L}) {
    const long double fd = (series_i0_ld(z + h) - series_i0_ld(z - h)) / (2 * h);
    EXPECT_LT(std::fabs(fd / series_i1_ld(z) - 1), 1e-6L);
    EXPECT_LT(rel_err(bessel_i1e(static_cast<double>(z)), fd * std::exp(-z)), 1e-6);
  }
}

TEST(BesselRatio, ValueAtOne) {
  const long double oracle = series_i0_ld(1.0L) / series_i1_ld(1.0L);
  EXPECT_NEAR(static_cast<double>(oracle), 2.2401937, 1e-7);
  EXPECT_LT(rel_err(bessel_ratio_i0_over_i1(1.0), oracle), 1e-10);
}

TEST(BesselRatio, SmallArgumentExpansion) {
  const double z = 1e-6;
  const double r = bessel_ratio_i0_over_i1(z);
  EXPECT_NEAR(r / (2.0 / z + z / 4.0), 1.0, 1e-9);
  EXPECT_NEAR(r, 2e6, 2e6 * 1e-9);
}

TEST(BesselRatio, ExceedsTwoOverZ) {
  for (double z : log_grid(1e-7, 1e5, 150)) EXPECT_GT(bessel_ratio_i0_over_i1(z), 2.0 / z) << z;
}

TEST(BesselRatio, MatchesOracleAcrossBranches) {
  for (double z : log_grid(1e-7, 1e3, 120)) {
    const long double oracle = z < 20 ? series_i0_ld(z) / series_i1_ld(z)
                                      : reference_i0e(z) / reference_i1e(z);
    EXPECT_LT(rel_err(bessel_ratio_i0_over_i1(z), oracle), 1e-10) << z;
    EXPECT_LT(rel_err(bessel_z_ratio(z), oracle * z), 1e-10) << z;
  }
  EXPECT_EQ(bessel_z_ratio(0.0), 2.0);
}

TEST(BesselI1eOverZ, ContinuousAtZero) {
  EXPECT_EQ(bessel_i1e_over_z(0.0), 0.5);
  for (double z : log_grid(1e-8, 1e3, 60)) {
    EXPECT_LT(rel_err(bessel_i1e_over_z(z), reference_i1e(z) / z), 1e-12) << z;
  }
}

}  // namespace
}  // namespace kacflow::specfun
