#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modphase/error.hpp"

namespace modphase {

// Any |state component| above this is treated as divergence.
inline constexpr double kDivergenceThreshold = 1e9;
inline constexpr double kMinAdaptiveStep = 1e-12;

class StateVector {
 public:
  StateVector() = default;
  StateVector(std::initializer_list<double> values) : StateVector(std::vector<double>(values)) {}
  explicit StateVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::InvalidArgument, "state vector must have dimension >= 1");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "state vector contains a non-finite value");
  }

  std::size_t dimension() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  std::vector<double> values_;
};

// An autonomous vector field: dimension() and derivative(state, out).
template <class F>
concept VectorField = requires(const F& f, std::span<const double> x, std::span<double> dx) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  f.derivative(x, dx);
};

enum class IntegrationMethod { RK4Fixed, DormandPrince45 };

inline const char* to_string(IntegrationMethod m) {
  return m == IntegrationMethod::RK4Fixed ? "rk4" : "dp45";
}

struct IntegratorConfig {
  IntegrationMethod method = IntegrationMethod::RK4Fixed;
  double dt = 0.01;
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double t_end = 2000.0;
  double transient_fraction = 0.5;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(dt > 0.0) || !std::isfinite(dt)) bad("dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) bad("t_end must be positive");
    if (!(dt < t_end)) bad("dt must be smaller than t_end");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) bad("tolerances must be positive");
    if (!(transient_fraction >= 0.0 && transient_fraction < 1.0)) bad("transient_fraction must lie in [0, 1)");
  }
};

// Uniformly sampled states, stored row-major.
class Trajectory {
 public:
  Trajectory(double t0, double dt, std::size_t dimension, std::vector<double> data)
      : t0_(t0), dt_(dt), dim_(dimension), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() % dim_ != 0) throw Error(ErrorCode::InvalidArgument, "ragged trajectory data");
    if (size() < 2) throw Error(ErrorCode::TooShort, "trajectory needs at least two samples");
  }

  std::size_t size() const { return data_.size() / dim_; }
  std::size_t dimension() const { return dim_; }
  double dt() const { return dt_; }
  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }

  std::vector<double> times() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
    return t;
  }

  std::span<const double> state(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::vector<double> column(std::size_t var) const {
    if (var >= dim_) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = data_[i * dim_ + var];
    return c;
  }

  // Every `stride`-th sample, starting with the first.
  Trajectory subsample(std::size_t stride) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); i += stride) out.insert(out.end(), state(i).begin(), state(i).end());
    return Trajectory(t0_, dt_ * static_cast<double>(stride), dim_, std::move(out));
  }

  const std::vector<double>& data() const { return data_; }

 private:
  double t0_;
  double dt_;
  std::size_t dim_;
  std::vector<double> data_;
};

namespace detail {

inline void check_state(std::span<const double> x, double t) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteStateError(t, "state became non-finite");
    if (std::abs(v) > kDivergenceThreshold) throw NonFiniteStateError(t, "state diverged beyond 1e9");
  }
}

template <VectorField F>
void eval_checked(const F& f, std::span<const double> x, std::span<double> dx, double t) {
  try {
    f.derivative(x, dx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonFiniteResult) throw NonFiniteStateError(t, e.what());
    throw;
  }
  for (double v : dx)
    if (!std::isfinite(v)) throw NonFiniteStateError(t, "derivative became non-finite");
}

// Classical RK4 with caller-owned scratch space, used by the integration loop.
template <VectorField F>
class Rk4Stepper {
 public:
  explicit Rk4Stepper(const F& f) : f_(f), n_(f.dimension()), k1_(n_), k2_(n_), k3_(n_), k4_(n_), tmp_(n_) {}

  void step(std::span<double> x, double dt, double t) {
    eval_checked(f_, x, k1_, t);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * dt * k1_[i];
    eval_checked(f_, tmp_, k2_, t);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + 0.5 * dt * k2_[i];
    eval_checked(f_, tmp_, k3_, t);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + dt * k3_[i];
    eval_checked(f_, tmp_, k4_, t);
    for (std::size_t i = 0; i < n_; ++i) x[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    check_state(x, t + dt);
  }

 private:
  const F& f_;
  std::size_t n_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

inline void check_dimension(std::size_t field_dim, std::size_t state_dim) {
  if (field_dim != state_dim)
    throw Error(ErrorCode::InvalidArgument, "state dimension " + std::to_string(state_dim) +
                                                " does not match system dimension " + std::to_string(field_dim));
}

}  // namespace detail

template <VectorField F>
StateVector step_rk4(const F& field, const StateVector& state, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  detail::check_dimension(field.dimension(), state.dimension());
  std::vector<double> x(state.values().begin(), state.values().end());
  detail::Rk4Stepper<F> stepper(field);
  stepper.step(x, dt, 0.0);
  return StateVector(std::move(x));
}

namespace detail {

template <VectorField F>
std::vector<double> integrate_rk4(const F& f, const StateVector& initial, std::size_t n_steps, double dt) {
  const std::size_t dim = initial.dimension();
  std::vector<double> out((n_steps + 1) * dim);
  std::vector<double> x(initial.values().begin(), initial.values().end());
  std::copy(x.begin(), x.end(), out.begin());
  Rk4Stepper<F> stepper(f);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    stepper.step(x, dt, static_cast<double>(s - 1) * dt);
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(s * dim));
  }
  return out;
}

// Dormand-Prince 5(4) with FSAL; accepted steps are resampled onto the
// uniform grid by cubic Hermite interpolation between step endpoints.
template <VectorField F>
std::vector<double> integrate_dp45(const F& f, const StateVector& initial, std::size_t n_steps,
                                   const IntegratorConfig& cfg) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // Difference between the 5th- and embedded 4th-order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = initial.dimension();
  const double dt = cfg.dt;
  const double t_end = static_cast<double>(n_steps) * dt;

  std::vector<double> out((n_steps + 1) * n);
  std::vector<double> y(initial.values().begin(), initial.values().end());
  std::copy(y.begin(), y.end(), out.begin());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n);

  double t = 0.0;
  double h = dt;
  std::size_t next_sample = 1;
  eval_checked(f, y, k1, t);

  while (next_sample <= n_steps) {
    h = std::min(h, t_end - t);
    if (h < kMinAdaptiveStep) {
      if (t_end - t < kMinAdaptiveStep) h = t_end - t;
      else throw Error(ErrorCode::StepUnderflow, "adaptive step shrank below 1e-12 at t=" + std::to_string(t));
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    eval_checked(f, tmp, k2, t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    eval_checked(f, tmp, k3, t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    eval_checked(f, tmp, k4, t);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    eval_checked(f, tmp, k5, t);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    eval_checked(f, tmp, k6, t);
    for (std::size_t i = 0; i < n; ++i)
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    eval_checked(f, y_new, k7, t + h);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err += (e / scale) * (e / scale);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (err <= 1.0) {
      check_state(y_new, t + h);
      const double t_new = (t_end - (t + h) < 1e-12 * t_end) ? t_end : t + h;
      while (next_sample <= n_steps) {
        const double ts = static_cast<double>(next_sample) * dt;
        if (ts > t_new + 1e-9 * dt) break;
        const double hh = t_new - t;
        const double s = std::clamp((ts - t) / hh, 0.0, 1.0);
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        double* row = out.data() + next_sample * n;
        for (std::size_t i = 0; i < n; ++i)
          row[i] = h00 * y[i] + h10 * hh * k1[i] + h01 * y_new[i] + h11 * hh * k7[i];
        ++next_sample;
      }
      t = t_new;
      y.swap(y_new);
      k1.swap(k7);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
  }
  return out;
}

}  // namespace detail

// Integrates from t=0 to t_end and returns the post-transient samples on the
// uniform grid of spacing config.dt.
template <VectorField F>
Trajectory integrate(const F& field, const StateVector& initial, const IntegratorConfig& config) {
  config.validate();
  detail::check_dimension(field.dimension(), initial.dimension());
  const auto n_steps = static_cast<std::size_t>(std::floor(config.t_end / config.dt + 1e-9));
  std::vector<double> data = config.method == IntegrationMethod::RK4Fixed
                                 ? detail::integrate_rk4(field, initial, n_steps, config.dt)
                                 : detail::integrate_dp45(field, initial, n_steps, config);
  const auto dropped = static_cast<std::size_t>(std::floor(config.transient_fraction * static_cast<double>(n_steps)));
  const std::size_t dim = initial.dimension();
  if (n_steps + 1 - dropped < 2) throw Error(ErrorCode::TooShort, "transient leaves fewer than two samples");
  data.erase(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(dropped * dim));
  return Trajectory(static_cast<double>(dropped) * config.dt, config.dt, dim, std::move(data));
}

inline constexpr double kMaxPeriodCv = 0.05;

// Mean spacing of upward crossings of the signal's mean level, in time units.
// Returns nullopt when there are fewer than three crossings, when the
// spacings vary too much to call the signal periodic, or when the signal's
// spread is at rounding level (a settled fixed point).
inline constexpr double kMinRelativeAmplitude = 1e-8;

inline std::optional<double> detect_period(std::span<const double> signal, double dt) {
  if (signal.size() < 3) return std::nullopt;
  const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(signal.size());
  double ss = 0.0;
  for (double v : signal) ss += (v - mean) * (v - mean);
  if (std::sqrt(ss / static_cast<double>(signal.size())) <= kMinRelativeAmplitude * std::max(1.0, std::abs(mean)))
    return std::nullopt;
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < signal.size(); ++i) {
    const double a = signal[i] - mean;
    const double b = signal[i + 1] - mean;
    if (!(a < 0.0 && b >= 0.0)) continue;
    double frac = a / (a - b);
    // Parabola through three neighbouring samples, root taken inside [i, i+1].
    const std::size_t j = i >= 1 ? i - 1 : i;
    if (j + 2 < signal.size()) {
      const double y0 = signal[j] - mean, y1 = signal[j + 1] - mean, y2 = signal[j + 2] - mean;
      const double qa = 0.5 * (y0 - 2.0 * y1 + y2);
      const double qb = 0.5 * (y2 - y0);
      const double qc = y1;
      const double base = static_cast<double>(i) - static_cast<double>(j + 1);  // local coordinate of sample i
      if (std::abs(qa) > 1e-14 * (std::abs(qb) + std::abs(qc) + 1e-300)) {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          const double q = -0.5 * (qb + std::copysign(sq, qb));
          for (double root : {q / qa, q != 0.0 ? qc / q : q / qa}) {
            const double f = root - base;
            if (f >= 0.0 && f <= 1.0) {
              frac = f;
              break;
            }
          }
        }
      }
    }
    crossings.push_back(static_cast<double>(i) + frac);
  }
  if (crossings.size() < 3) return std::nullopt;
  std::vector<double> spacing(crossings.size() - 1);
  for (std::size_t k = 0; k + 1 < crossings.size(); ++k) spacing[k] = crossings[k + 1] - crossings[k];
  const double m = std::accumulate(spacing.begin(), spacing.end(), 0.0) / static_cast<double>(spacing.size());
  double var = 0.0;
  for (double s : spacing) var += (s - m) * (s - m);
  var /= static_cast<double>(spacing.size());
  if (!(m > 0.0) || std::sqrt(var) / m > kMaxPeriodCv) return std::nullopt;
  return m * dt;
}

inline std::optional<double> detect_period(const Trajectory& traj, std::size_t variable_index) {
  const auto col = traj.column(variable_index);
  return detect_period(col, traj.dt());
}

}  // namespace modphase
