#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "modphase/classify.hpp"
#include "modphase/error.hpp"
#include "modphase/ode.hpp"
#include "modphase/symbolic.hpp"
#include "modphase/systems.hpp"

namespace modphase {

// A trajectory re-embedded in input/output/gain coordinates.
struct ModulationTrace {
  std::vector<double> times;
  std::vector<double> input;
  std::vector<double> modulator;
  std::vector<double> output;
  std::vector<double> gain;

  std::size_t size() const { return times.size(); }
};

namespace detail {

inline const NonlinearTermDef& require_term(const SystemDef& system) {
  if (!system.term()) throw Error(ErrorCode::MissingTerm, "system '" + system.name() + "' declares no term");
  return *system.term();
}

// Slots are the state variables followed by the parameters, matching SystemDef.
struct TermEvaluator {
  std::vector<double> slots;
  CompiledExpr output;
  CompiledExpr gain;
  std::size_t input_slot;
  std::size_t modulator_slot;

  TermEvaluator(const SystemDef& system, const NonlinearTermDef& term) {
    std::vector<std::string> names = system.state_vars();
    for (const auto& [p, v] : system.params()) names.push_back(p);
    slots.assign(names.size(), 0.0);
    std::size_t k = system.dimension();
    for (const auto& [p, v] : system.params()) slots[k++] = v;
    output = CompiledExpr(term.expr, names);
    gain = CompiledExpr(gain_expression(term), names);
    input_slot = *system.var_index(term.input_var);
    modulator_slot = *system.var_index(term.modulator_var);
  }

  void load(std::span<const double> state) { std::copy(state.begin(), state.end(), slots.begin()); }
};

}  // namespace detail

inline ModulationTrace trace(const Trajectory& traj, const SystemDef& system) {
  const auto& term = detail::require_term(system);
  if (traj.dimension() != system.dimension())
    throw Error(ErrorCode::InvalidArgument, "trajectory dimension does not match the system");
  detail::TermEvaluator ev(system, term);
  const std::size_t n = traj.size();
  ModulationTrace tr;
  tr.times = traj.times();
  tr.input.resize(n);
  tr.modulator.resize(n);
  tr.output.resize(n);
  tr.gain.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ev.load(traj.state(i));
    tr.input[i] = ev.slots[ev.input_slot];
    tr.modulator[i] = ev.slots[ev.modulator_slot];
    tr.output[i] = ev.output(ev.slots);
    tr.gain[i] = ev.gain(ev.slots);
  }
  return tr;
}

// Central difference of the term in its input variable, at (modulator, input) = (x, z).
inline double gain_fd(const NonlinearTermDef& term, double x, double z, double h = 1e-5,
                      const SystemParams& params = {}) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "h must be positive");
  Bindings b(params.begin(), params.end());
  b[term.modulator_var] = x;
  b[term.input_var] = z + h;
  const double up = evaluate(term.expr, b);
  b[term.input_var] = z - h;
  const double down = evaluate(term.expr, b);
  return (up - down) / (2.0 * h);
}

inline constexpr std::size_t kFrameGridPoints = 401;

// One snapshot of the input/output picture: the I/O curve at the current
// modulator value, the state point on it and the tangent slope there.
struct Frame {
  double time;
  double modulator;
  std::vector<double> curve;  // f(modulator, grid[k])
  double input;
  double output;
  double slope;
};

struct FrameSet {
  std::vector<double> grid;
  std::vector<Frame> frames;
};

inline FrameSet io_space_frames(const Trajectory& traj, const SystemDef& system, std::size_t n_frames) {
  const auto& term = detail::require_term(system);
  if (n_frames < 1) throw Error(ErrorCode::InvalidArgument, "n_frames must be at least 1");
  const ModulationTrace tr = trace(traj, system);
  const auto [lo_it, hi_it] = std::minmax_element(tr.input.begin(), tr.input.end());
  double lo = *lo_it, hi = *hi_it;
  double pad = 0.1 * (hi - lo);
  if (pad <= 0.0) pad = 0.5;
  lo -= pad;
  hi += pad;

  FrameSet out;
  out.grid.resize(kFrameGridPoints);
  for (std::size_t k = 0; k < kFrameGridPoints; ++k)
    out.grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kFrameGridPoints - 1);

  detail::TermEvaluator ev(system, term);
  const std::size_t n = tr.size();
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t i = f * n / n_frames;
    Frame fr{tr.times[i], tr.modulator[i], {}, tr.input[i], tr.output[i], tr.gain[i]};
    ev.load(traj.state(i));
    fr.curve.resize(kFrameGridPoints);
    for (std::size_t k = 0; k < kFrameGridPoints; ++k) {
      ev.slots[ev.input_slot] = out.grid[k];
      fr.curve[k] = ev.output(ev.slots);
    }
    out.frames.push_back(std::move(fr));
  }
  return out;
}

}  // namespace modphase
