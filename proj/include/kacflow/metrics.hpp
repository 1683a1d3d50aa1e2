#pragma once

// Validation metrics: GMM negative log-likelihood, mode coverage, 1D empirical
// Wasserstein-2, and the L2 distance between the Kac-smoothed and the
// heat-smoothed Gaussian.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kacflow/error.hpp"
#include "kacflow/kac1d.hpp"
#include "kacflow/parallel.hpp"
#include "kacflow/quadrature.hpp"
#include "kacflow/target.hpp"

namespace kacflow {

// Mean negative log density of the samples under a Gaussian mixture.
inline double gmm_nll(const std::vector<Point>& samples, const TargetSpec& gmm) {
  if (samples.empty()) throw UsageError("gmm_nll needs at least one sample");
  if (gmm.kind() != TargetSpec::Kind::gmm) throw UsageError("gmm_nll needs a Gaussian mixture target");
  double acc = 0.0;
  for (const auto& x : samples) acc -= gmm.log_density(x);
  return acc / static_cast<double>(samples.size());
}

struct ModeCoverage {
  double fraction = 0.0;                 // samples within radius of their nearest mode
  std::size_t modes_hit = 0;             // modes with at least one such sample
  std::vector<std::size_t> per_mode_counts;
};

// Assigns each sample to its nearest mode; it counts for that mode when it
// lies within `radius` of it.
inline ModeCoverage mode_coverage(const std::vector<Point>& samples, const std::vector<Point>& modes,
                                  double radius) {
  if (modes.empty()) throw UsageError("mode_coverage needs at least one mode");
  if (!(radius > 0.0)) throw UsageError("mode_coverage radius must be positive");
  ModeCoverage out;
  out.per_mode_counts.assign(modes.size(), 0);
  std::size_t within = 0;
  for (const auto& x : samples) {
    if (x.size() != modes.front().size()) throw UsageError("sample and mode dimensions differ");
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < modes.size(); ++k) {
      double sq = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - modes[k][i]) * (x[i] - modes[k][i]);
      if (sq < best_sq) {
        best_sq = sq;
        best = k;
      }
    }
    if (best_sq <= radius * radius) {
      ++within;
      ++out.per_mode_counts[best];
    }
  }
  out.fraction = samples.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(samples.size());
  out.modes_hit = static_cast<std::size_t>(
      std::count_if(out.per_mode_counts.begin(), out.per_mode_counts.end(), [](std::size_t c) { return c > 0; }));
  return out;
}

// W2 between two 1D empirical measures via the sorted (quantile) coupling.
inline double empirical_w2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size()) throw UsageError("empirical_w2_1d needs equal sample counts");
  if (a.empty()) throw UsageError("empirical_w2_1d needs at least one sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace detail {

inline double normal_pdf(double x, double sd) {
  return std::exp(-0.5 * (x / sd) * (x / sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace detail

// L2(R) distance between u = N(0, sigma0^2) * mu_t (the Kac law at time t,
// atoms included as shifted Gaussians) and the heat solution
// h = N(0, sigma0^2 + c^2 t / a).
inline double kac_heat_l2(const KacParams& p, double sigma0, double t) {
  if (!(sigma0 > 0.0)) throw DomainError("sigma0 must be positive");
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
  const double ct = p.c * t;
  const double w = kac1d::atom_weight(p, t);
  const double heat_sd = std::sqrt(sigma0 * sigma0 + p.sigma2() * t);
  const double range = std::max(ct + 8.0 * sigma0, 10.0 * heat_sd);
  const double kernel_reach = 9.0 * sigma0;
  const auto u = [&](double x) {
    double v = w * (detail::normal_pdf(x - ct, sigma0) + detail::normal_pdf(x + ct, sigma0));
    const double lo = std::max(-ct, x - kernel_reach);
    const double hi = std::min(ct, x + kernel_reach);
    if (hi > lo) {
      const auto inner = [&](double y) { return kac1d::density_cont(p, t, y) * detail::normal_pdf(x - y, sigma0); };
      v += quad::integrate(inner, lo, hi, 1e-13).value;
    }
    return v;
  };
  const auto sq = [&](double x) {
    const double diff = detail::normal_pdf(x, heat_sd) - u(x);
    return diff * diff;
  };
  // The integrand is even; integrate over [0, range] with a break at the atom.
  // A coarse pass sets the scale, the second pass targets 1e-8 relative
  // accuracy on the L2 distance (2e-8 on its square).
  const double atom = std::min(ct, range);
  const auto squared_norm = [&](double tol) {
    double total = 0.0;
    if (atom > 0.0) total += quad::integrate(sq, 0.0, atom, 0.5 * tol).value;
    return total + quad::integrate(sq, atom, range, 0.5 * tol).value;
  };
  const double coarse = squared_norm(1e-10);
  const double total = squared_norm(std::max(2e-8 * coarse, 1e-20));
  return std::sqrt(std::max(0.0, 2.0 * total));
}

// kac_heat_l2 over a time grid, evaluated in parallel.
inline std::vector<double> kac_heat_l2_grid(const KacParams& p, double sigma0, const std::vector<double>& ts,
                                            unsigned threads = 1) {
  std::vector<double> out(ts.size());
  parallel_for(ts.size(), threads, [&](std::size_t i) { out[i] = kac_heat_l2(p, sigma0, ts[i]); });
  return out;
}

}  // namespace kacflow
