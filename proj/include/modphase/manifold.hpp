#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "modphase/error.hpp"
#include "modphase/modulation.hpp"
#include "modphase/residual.hpp"

namespace modphase {

enum class ManifoldVerdict { CollapsedOnOutput, CollapsedOnInput, ThreeDimensional };

inline const char* to_string(ManifoldVerdict v) {
  switch (v) {
    case ManifoldVerdict::CollapsedOnOutput: return "CollapsedOnOutput";
    case ManifoldVerdict::CollapsedOnInput:  return "CollapsedOnInput";
    case ManifoldVerdict::ThreeDimensional:  return "ThreeDimensional";
  }
  return "?";
}

inline int manifold_dimension(ManifoldVerdict v) { return v == ManifoldVerdict::ThreeDimensional ? 3 : 2; }

inline constexpr int kMaxFitDegree = 6;

struct BinnedPoint {
  double x;
  double y;
};

struct CollapseReport {
  double residual_vs_output = 0.0;
  double residual_vs_input = 0.0;
  ManifoldVerdict verdict = ManifoldVerdict::ThreeDimensional;
  // Ascending powers of the collapse coordinate; empty when no collapse or
  // when no polynomial of degree <= 6 fits.
  std::vector<double> fitted_relation;
  double fit_rms = 0.0;  // divided by sd(gain)
  // Equal-occupancy bin means, reported when the relation is not polynomial.
  std::vector<BinnedPoint> binned_relation;
};

namespace detail {

struct PolyFit {
  std::vector<double> coefficients;
  double normalized_rms;
};

inline PolyFit polyfit(std::span<const double> xs, std::span<const double> ys, int degree) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd v(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      v(i, k) = p;
      p *= xs[static_cast<std::size_t>(i)];
    }
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = v.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd r = v * c - y;
  const double sd = stddev_of(ys, mean_of(ys));
  const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(n));
  return {std::vector<double>(c.data(), c.data() + c.size()), sd > 0.0 ? rms / sd : rms};
}

inline std::vector<BinnedPoint> binned_means(std::span<const double> xs, std::span<const double> ys) {
  const auto order = sorted_order(xs);
  const std::size_t n = xs.size();
  std::vector<BinnedPoint> out;
  for (std::size_t k = 0; k < kResidualBins; ++k) {
    const std::size_t lo = k * n / kResidualBins, hi = (k + 1) * n / kResidualBins;
    if (hi <= lo) continue;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sx += xs[order[i]];
      sy += ys[order[i]];
    }
    const double m = static_cast<double>(hi - lo);
    out.push_back({sx / m, sy / m});
  }
  return out;
}

}  // namespace detail

inline CollapseReport classify_manifold(const ModulationTrace& tr) {
  if (tr.size() < kMinResidualSamples) throw Error(ErrorCode::TooFewSamples, "trace needs at least 100 samples");
  CollapseReport rep;
  rep.residual_vs_output = functional_residual(tr.output, tr.gain);
  rep.residual_vs_input = functional_residual(tr.input, tr.gain);
  const bool on_output = rep.residual_vs_output < kCollapseThreshold;
  const bool on_input = rep.residual_vs_input < kCollapseThreshold;
  if (!on_output && !on_input) return rep;

  const bool pick_output = on_output && (!on_input || rep.residual_vs_output <= rep.residual_vs_input);
  rep.verdict = pick_output ? ManifoldVerdict::CollapsedOnOutput : ManifoldVerdict::CollapsedOnInput;
  const auto& axis = pick_output ? tr.output : tr.input;
  const double residual = pick_output ? rep.residual_vs_output : rep.residual_vs_input;
  const double target = std::max(1.1 * residual, 1e-9);
  for (int deg = 0; deg <= kMaxFitDegree; ++deg) {
    auto fit = detail::polyfit(axis, tr.gain, deg);
    if (fit.normalized_rms <= target) {
      rep.fitted_relation = std::move(fit.coefficients);
      rep.fit_rms = fit.normalized_rms;
      return rep;
    }
  }
  rep.binned_relation = detail::binned_means(axis, tr.gain);
  return rep;
}

}  // namespace modphase
