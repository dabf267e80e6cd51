#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <fftw3.h>

#include "modphase/error.hpp"
#include "modphase/modulation.hpp"
#include "modphase/ode.hpp"

namespace modphase {

inline constexpr double kEdgeTrimFraction = 0.02;
inline constexpr std::size_t kPhaseBins = 360;
inline constexpr double kSymmetricThreshold = 0.05;
inline constexpr double kAsymmetricThreshold = 0.15;
inline constexpr double kMaxEmptyBinFraction = 0.10;

struct PhaseSeries {
  std::vector<double> times;
  std::vector<double> phase;      // wrapped to (-pi, pi]
  std::vector<double> unwrapped;
  std::vector<double> amplitude;
  // Samples in [interior_begin, interior_end) are used for statistics.
  std::size_t interior_begin = 0;
  std::size_t interior_end = 0;
  double period = 0.0;

  std::size_t size() const { return times.size(); }
};

namespace detail {

// FFTW's planner is not re-entrant; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  FftPlan(std::size_t n, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace detail

// Analytic signal of a real sequence by the frequency-domain method.
inline std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
  const std::size_t n = x.size();
  detail::FftwBuffer buf(n), spec(n);
  detail::FftPlan forward(n, buf.data, spec.data, FFTW_FORWARD);
  detail::FftPlan backward(n, spec.data, buf.data, FFTW_BACKWARD);
  for (std::size_t i = 0; i < n; ++i) {
    buf.data[i][0] = x[i];
    buf.data[i][1] = 0.0;
  }
  forward.execute();
  // Keep DC (and Nyquist for even n), double positive, zero negative bins.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t k = 1; k < half; ++k) {
    spec.data[k][0] *= 2.0;
    spec.data[k][1] *= 2.0;
  }
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec.data[k][0] = spec.data[k][1] = 0.0;
  backward.execute();
  std::vector<std::complex<double>> out(n);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {buf.data[i][0] * inv, buf.data[i][1] * inv};
  return out;
}

inline PhaseSeries analytic_phase(std::span<const double> signal, double dt, double t0 = 0.0) {
  if (signal.size() < 64) throw Error(ErrorCode::TooShort, "analytic_phase needs at least 64 samples");
  const auto period = detect_period(signal, dt);
  if (!period) throw Error(ErrorCode::NotOscillatory, "signal has no stable period");
  // Largest whole number of periods that fits.
  const double span_time = static_cast<double>(signal.size() - 1) * dt;
  const double cycles = std::floor(span_time / *period);
  if (cycles < 1.0) throw Error(ErrorCode::TooShort, "signal shorter than one period");
  const auto n = std::min(signal.size(), static_cast<std::size_t>(std::llround(cycles * *period / dt)));
  if (n < 64) throw Error(ErrorCode::TooShort, "whole-period window shorter than 64 samples");

  std::vector<double> x(signal.begin(), signal.begin() + static_cast<std::ptrdiff_t>(n));
  const double mean = detail::mean_of(x);
  for (double& v : x) v -= mean;
  const auto z = analytic_signal(x);

  PhaseSeries ps;
  ps.period = *period;
  ps.times.resize(n);
  ps.phase.resize(n);
  ps.unwrapped.resize(n);
  ps.amplitude.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ps.times[i] = t0 + static_cast<double>(i) * dt;
    ps.phase[i] = detail::wrap_pi(std::arg(z[i]));
    ps.amplitude[i] = std::abs(z[i]);
    ps.unwrapped[i] = i == 0 ? ps.phase[0] : ps.unwrapped[i - 1] + detail::wrap_pi(ps.phase[i] - ps.phase[i - 1]);
  }
  const auto edge = static_cast<std::size_t>(std::floor(kEdgeTrimFraction * static_cast<double>(n)));
  ps.interior_begin = edge;
  ps.interior_end = n - edge;
  return ps;
}

enum class ExtremumKind { Min, Max };

inline const char* to_string(ExtremumKind k) { return k == ExtremumKind::Min ? "min" : "max"; }

struct Extremum {
  std::size_t index;
  ExtremumKind kind;
};

inline std::size_t extrema_guard_window(double period, double dt) {
  return std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(0.01 * period / dt)));
}

// Strict local extrema with `guard` samples on each side; a plateau counts
// once, at its midpoint. Extrema in the 2% edges are dropped.
inline std::vector<Extremum> gain_extrema(std::span<const double> gain, std::size_t guard) {
  std::vector<Extremum> out;
  const std::size_t n = gain.size();
  if (n < 3) return out;
  const auto edge = static_cast<std::size_t>(std::floor(kEdgeTrimFraction * static_cast<double>(n)));
  std::size_t a = 0;
  while (a < n) {
    std::size_t b = a;
    while (b + 1 < n && gain[b + 1] == gain[a]) ++b;
    if (a >= guard && b + guard < n) {
      bool is_max = true, is_min = true;
      for (std::size_t k = 1; k <= guard && (is_max || is_min); ++k) {
        const double l = gain[a - k], r = gain[b + k];
        if (!(l < gain[a] && r < gain[a])) is_max = false;
        if (!(l > gain[a] && r > gain[a])) is_min = false;
      }
      const std::size_t mid = a + (b - a) / 2;
      if ((is_max || is_min) && mid >= edge && mid < n - edge)
        out.push_back({mid, is_max ? ExtremumKind::Max : ExtremumKind::Min});
    }
    a = b + 1;
  }
  return out;
}

// Guard window derived from the period of the trace's output.
inline std::vector<Extremum> gain_extrema(const ModulationTrace& tr) {
  if (tr.size() < 3) return {};
  const double dt = tr.times[1] - tr.times[0];
  const auto period = detect_period(tr.output, dt);
  return gain_extrema(tr.gain, period ? extrema_guard_window(*period, dt) : 3);
}

namespace detail {

inline void check_grid(const ModulationTrace& tr, const PhaseSeries& ps) {
  if (ps.size() == 0 || ps.size() > tr.size())
    throw Error(ErrorCode::GridMismatch, "phase series is not a window of the trace");
  const double scale = std::max(1.0, std::abs(tr.times[0]));
  const double dt_tr = tr.size() > 1 ? tr.times[1] - tr.times[0] : 0.0;
  const double dt_ps = ps.size() > 1 ? ps.times[1] - ps.times[0] : dt_tr;
  if (std::abs(tr.times[0] - ps.times[0]) > 1e-9 * scale || std::abs(dt_tr - dt_ps) > 1e-9 * std::abs(dt_tr))
    throw Error(ErrorCode::GridMismatch, "phase series and trace use different time grids");
}

}  // namespace detail

// Phase advance between consecutive gain extrema inside the phase interior,
// reduced into (0, 2*pi].
inline std::vector<double> extrema_phase_diffs(const ModulationTrace& tr, const PhaseSeries& ps,
                                               std::span<const Extremum> extrema) {
  detail::check_grid(tr, ps);
  std::vector<std::size_t> idx;
  for (const auto& e : extrema)
    if (e.index >= ps.interior_begin && e.index < ps.interior_end) idx.push_back(e.index);
  std::vector<double> diffs;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 1; k < idx.size(); ++k) {
    double d = std::fmod(ps.unwrapped[idx[k]] - ps.unwrapped[idx[k - 1]], two_pi);
    if (d <= 0.0) d += two_pi;
    diffs.push_back(d);
  }
  return diffs;
}

inline std::vector<double> extrema_phase_diffs(const ModulationTrace& tr, const PhaseSeries& ps) {
  const auto ex = gain_extrema(tr);
  return extrema_phase_diffs(tr, ps, ex);
}

struct SymmetryReport {
  double score = 0.0;
  double axis_phase = 0.0;
  std::size_t axis_bin = 0;
  std::vector<double> extrema_phase_diffs;
  // Mean normalized gain per phase bin (bin k centred at -pi + (k + 0.5) * 2pi / bins).
  std::vector<double> curve;
  std::size_t empty_bins = 0;
};

inline double bin_center(std::size_t k, std::size_t bins = kPhaseBins) {
  return -std::numbers::pi + (static_cast<double>(k) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(bins);
}

// Asymmetry of a circular curve about bin k, relative to its spread.
inline double mirror_asymmetry(std::span<const double> curve, std::size_t k) {
  const std::size_t m = curve.size();
  const double mean = detail::mean_of(curve);
  double spread = 0.0;
  for (double v : curve) spread += (v - mean) * (v - mean);
  spread = std::sqrt(spread / static_cast<double>(m));
  if (spread <= 1e-15) return 0.0;
  double s = 0.0;
  const std::size_t half = m / 2;
  for (std::size_t d = 1; d < half; ++d) {
    const double diff = curve[(k + d) % m] - curve[(k + m - d) % m];
    s += diff * diff;
  }
  return std::sqrt(s / static_cast<double>(half - 1)) / spread;
}

// Best mirror axis of a binned curve. Axes k and k + bins/2 describe the same
// mirror line; the one where the curve is larger is reported.
inline SymmetryReport symmetry_of_curve(std::vector<double> curve) {
  SymmetryReport rep;
  const std::size_t m = curve.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < m / 2; ++k) {
    const double a = mirror_asymmetry(curve, k);
    if (a < best - 1e-12) {
      best = a;
      best_k = k;
    }
  }
  const std::size_t opposite = best_k + m / 2;
  if (curve[opposite] > curve[best_k]) best_k = opposite;
  rep.score = best;
  rep.axis_bin = best_k;
  rep.axis_phase = bin_center(best_k, m);
  rep.curve = std::move(curve);
  return rep;
}

// Bins (phase, normalized gain) over the interior of the phase series.
inline std::vector<double> phase_gain_curve(std::span<const double> gain, const PhaseSeries& ps,
                                            std::size_t* empty_bins = nullptr) {
  if (ps.interior_end <= ps.interior_begin || gain.size() < ps.interior_end)
    throw Error(ErrorCode::TooShort, "no interior samples");
  const double span = ps.unwrapped[ps.interior_end - 1] - ps.unwrapped[ps.interior_begin];
  if (span < 2.0 * std::numbers::pi) throw Error(ErrorCode::TooShort, "less than one full period of phase");

  double gmax = 0.0;
  for (std::size_t i = ps.interior_begin; i < ps.interior_end; ++i) gmax = std::max(gmax, std::abs(gain[i]));
  const double scale = gmax > 0.0 ? 1.0 / gmax : 1.0;

  std::vector<double> sum(kPhaseBins, 0.0);
  std::vector<std::size_t> count(kPhaseBins, 0);
  const double width = 2.0 * std::numbers::pi / static_cast<double>(kPhaseBins);
  for (std::size_t i = ps.interior_begin; i < ps.interior_end; ++i) {
    auto k = static_cast<std::size_t>(std::floor((ps.phase[i] + std::numbers::pi) / width));
    k = std::min(k, kPhaseBins - 1);
    sum[k] += gain[i] * scale;
    ++count[k];
  }
  std::size_t empty = 0;
  for (auto c : count) empty += c == 0;
  if (static_cast<double>(empty) > kMaxEmptyBinFraction * static_cast<double>(kPhaseBins))
    throw Error(ErrorCode::EmptyBins, std::to_string(empty) + " of 360 phase bins are empty");
  if (empty == kPhaseBins) throw Error(ErrorCode::EmptyBins, "all phase bins are empty");

  std::vector<double> curve(kPhaseBins);
  for (std::size_t k = 0; k < kPhaseBins; ++k) curve[k] = count[k] ? sum[k] / static_cast<double>(count[k]) : 0.0;
  // Fill isolated gaps by circular linear interpolation.
  for (std::size_t k = 0; k < kPhaseBins; ++k) {
    if (count[k]) continue;
    std::size_t lo = 1, hi = 1;
    while (!count[(k + kPhaseBins - lo) % kPhaseBins]) ++lo;
    while (!count[(k + hi) % kPhaseBins]) ++hi;
    const double a = sum[(k + kPhaseBins - lo) % kPhaseBins] / static_cast<double>(count[(k + kPhaseBins - lo) % kPhaseBins]);
    const double b = sum[(k + hi) % kPhaseBins] / static_cast<double>(count[(k + hi) % kPhaseBins]);
    curve[k] = a + (b - a) * static_cast<double>(lo) / static_cast<double>(lo + hi);
  }
  if (empty_bins) *empty_bins = empty;
  return curve;
}

inline SymmetryReport symmetry_score(const ModulationTrace& tr, const PhaseSeries& ps) {
  detail::check_grid(tr, ps);
  std::size_t empty = 0;
  auto rep = symmetry_of_curve(phase_gain_curve(tr.gain, ps, &empty));
  rep.empty_bins = empty;
  rep.extrema_phase_diffs = extrema_phase_diffs(tr, ps);
  return rep;
}

enum class PlasticityClass { Constrained, Unconstrained };

inline const char* to_string(PlasticityClass c) {
  return c == PlasticityClass::Constrained ? "Constrained" : "Unconstrained";
}

struct PlasticityReport {
  double base_score;
  double perturbed_score;
  double axis_drift;        // radians, in [0, pi]
  double max_curve_change;  // max over bins of |curve_base - curve_perturbed|
  PlasticityClass classification;
};

inline PlasticityReport phase_plasticity_report(const SymmetryReport& base, const SymmetryReport& perturbed) {
  if (base.curve.size() != perturbed.curve.size() || base.curve.empty())
    throw Error(ErrorCode::IncompatibleReports, "symmetry reports use different phase binnings");
  PlasticityReport rep{};
  rep.base_score = base.score;
  rep.perturbed_score = perturbed.score;
  rep.axis_drift = std::abs(detail::wrap_pi(perturbed.axis_phase - base.axis_phase));
  for (std::size_t k = 0; k < base.curve.size(); ++k)
    rep.max_curve_change = std::max(rep.max_curve_change, std::abs(base.curve[k] - perturbed.curve[k]));
  const double bin_width = 2.0 * std::numbers::pi / static_cast<double>(base.curve.size());
  const bool constrained = base.score < kSymmetricThreshold && perturbed.score < kSymmetricThreshold &&
                           rep.axis_drift < 2.0 * bin_width;
  rep.classification = constrained ? PlasticityClass::Constrained : PlasticityClass::Unconstrained;
  return rep;
}

}  // namespace modphase
