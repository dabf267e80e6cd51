#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "modphase/error.hpp"

namespace modphase {

// Normalized residual below which ys is declared a function of xs. Shared by
// static term classification and trajectory manifold classification.
inline constexpr double kCollapseThreshold = 0.02;
inline constexpr std::size_t kResidualBins = 64;
inline constexpr std::size_t kMinResidualSamples = 100;

namespace detail {

inline std::vector<std::size_t> sorted_order(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  return order;
}

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stddev_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Treats ys as constant when its spread is at rounding level.
inline bool effectively_constant(double sd, double mean) { return sd <= 1e-12 * std::max(1.0, std::abs(mean)); }

}  // namespace detail

// How far ys is from being a single-valued function of xs.
//
// Pairs are sorted by xs and split into equal-occupancy bins. Within each bin
// ys is fitted by a least-squares line in xs; the RMS of the remaining
// deviations, divided by the standard deviation of ys, is the residual. An
// exact smooth relation gives ~0, independent ys gives ~1.
inline double functional_residual(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidArgument, "xs and ys differ in length");
  if (xs.size() < kMinResidualSamples)
    throw Error(ErrorCode::TooFewSamples, "functional_residual needs at least 100 samples");
  const std::size_t n = xs.size();
  const double ymean = detail::mean_of(ys);
  const double ysd = detail::stddev_of(ys, ymean);
  if (detail::effectively_constant(ysd, ymean)) return 0.0;

  const auto order = detail::sorted_order(xs);
  double ss = 0.0;
  for (std::size_t k = 0; k < kResidualBins; ++k) {
    const std::size_t lo = k * n / kResidualBins;
    const std::size_t hi = (k + 1) * n / kResidualBins;
    if (hi <= lo) continue;
    const double m = static_cast<double>(hi - lo);
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sx += xs[order[i]];
      sy += ys[order[i]];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double dx = xs[order[i]] - mx;
      sxx += dx * dx;
      sxy += dx * (ys[order[i]] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double r = ys[order[i]] - my - slope * (xs[order[i]] - mx);
      ss += r * r;
    }
  }
  return std::sqrt(ss / static_cast<double>(n)) / ysd;
}

}  // namespace modphase
