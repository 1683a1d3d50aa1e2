#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.
//
// Nodes and weights come from Boost.Math. The refinement loop is ours: the
// interval with the largest |K15 - G7| estimate is bisected until the summed
// estimate drops below an absolute tolerance. Boost's own recursive driver
// works with relative tolerances and recurses to max depth everywhere when a
// tolerance sits below its roundoff floor, which is the common case for the
// tiny probability masses integrated here.

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kacflow/error.hpp"

namespace kacflow::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

inline constexpr int kMaxIntervals = 4000;

namespace detail {

struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double lo, double hi) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f0 = f(mid);
  double kronrod = wk[0] * f0;
  // Gauss-7 nodes are the even-indexed Kronrod nodes (0 is shared).
  double gauss = wg[0] * f0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double pair = f(mid - half * x[i]) + f(mid + half * x[i]);
    kronrod += wk[i] * pair;
    if (i % 2 == 0) gauss += wg[i / 2] * pair;
  }
  const double value = half * kronrod;
  const double error = std::max(std::abs(half * (kronrod - gauss)),
                                 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
  return {lo, hi, value, error};
}

}  // namespace detail

// Integrates f over [lo, hi] to absolute accuracy abs_tol. Throws
// NumericalError carrying the achieved error if refinement stalls.
template <class F>
Result integrate(F&& f, double lo, double hi, double abs_tol = 1e-12,
                 int max_intervals = kMaxIntervals) {
  if (hi == lo) return {};
  if (hi < lo) {
    const Result r = integrate(f, hi, lo, abs_tol, max_intervals);
    return {-r.value, r.error};
  }
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gauss_kronrod_15(f, lo, hi));
  double value = heap.top().value;
  double error = heap.top().error;
  const double min_width = 1e-14 * (hi - lo);
  std::vector<detail::Panel> settled;
  while (error > abs_tol && static_cast<int>(heap.size() + settled.size()) < max_intervals &&
         !heap.empty()) {
    const detail::Panel worst = heap.top();
    heap.pop();
    if (worst.hi - worst.lo < min_width) {
      settled.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    const detail::Panel left = detail::gauss_kronrod_15(f, worst.lo, mid);
    const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.hi);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running totals.
  value = 0.0;
  error = 0.0;
  for (const auto& p : settled) {
    value += p.value;
    error += p.error;
  }
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  if (error > abs_tol) {
    std::ostringstream msg;
    msg << "quadrature did not converge on [" << lo << ", " << hi << "]: achieved error "
        << error << " > requested " << abs_tol;
    throw NumericalError(msg.str());
  }
  return {value, error};
}

}  // namespace kacflow::quad
