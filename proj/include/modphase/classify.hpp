#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "modphase/error.hpp"
#include "modphase/expr.hpp"
#include "modphase/residual.hpp"
#include "modphase/symbolic.hpp"
#include "modphase/systems.hpp"

namespace modphase {

enum class TermClass { LinearInputModulation, LinearOutputModulation, GainModulation, NoModulation };

enum class CollapseAxis { Output, Input, None };

inline const char* to_string(TermClass c) {
  switch (c) {
    case TermClass::LinearInputModulation:  return "LinearInputModulation";
    case TermClass::LinearOutputModulation: return "LinearOutputModulation";
    case TermClass::GainModulation:         return "GainModulation";
    case TermClass::NoModulation:           return "NoModulation";
  }
  return "?";
}

inline const char* to_string(CollapseAxis a) {
  switch (a) {
    case CollapseAxis::Output: return "Output";
    case CollapseAxis::Input:  return "Input";
    case CollapseAxis::None:   return "None";
  }
  return "?";
}

struct TermClassification {
  TermClass term_class;
  int predicted_dim;
  CollapseAxis collapse_axis;
  Expr gain_expr;
  // Diagnostics from the sampled collapse test (best of both directions).
  double residual_vs_output = 0.0;
  double residual_vs_input = 0.0;
  std::size_t samples = 0;
};

// Region of (modulator, input) values sampled by classify_term.
struct SamplingBox {
  double modulator_lo = -3.0;
  double modulator_hi = 3.0;
  double input_lo = -3.0;
  double input_hi = 3.0;
};

struct ClassifyOptions {
  SamplingBox box{};
  std::size_t samples = 512;
  std::uint64_t seed = 0;
  // Values for any parameters the term refers to.
  SystemParams params{};
};

// Instantaneous gain G = df/d(input), simplified.
inline Expr gain_expression(const NonlinearTermDef& term) { return differentiate(term.expr, term.input_var); }

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// 2-D Halton points (bases 2 and 3) with a seed-driven Cranley-Patterson shift.
inline std::vector<std::array<double, 2>> halton_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double s0 = unit_from_bits(rng());
  const double s1 = unit_from_bits(rng());
  std::vector<std::array<double, 2>> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = radical_inverse(i + 1, 2) + s0;
    double v = radical_inverse(i + 1, 3) + s1;
    pts[i] = {u - std::floor(u), v - std::floor(v)};
  }
  return pts;
}

}  // namespace detail

inline TermClassification classify_term(const NonlinearTermDef& term, const ClassifyOptions& opts = {}) {
  if (term.input_var == term.modulator_var)
    throw Error(ErrorCode::DegenerateTerm, "input and modulator must be distinct variables");
  const Expr gain = gain_expression(term);
  const Expr dmod = differentiate(term.expr, term.modulator_var);
  if (gain.is_constant(0.0))
    throw Error(ErrorCode::DegenerateTerm, "term does not depend on input '" + term.input_var + "'");
  if (dmod.is_constant(0.0))
    throw Error(ErrorCode::DegenerateTerm, "term does not depend on modulator '" + term.modulator_var + "'");

  const Expr d2_in = differentiate(gain, term.input_var);
  const Expr d2_mod = differentiate(dmod, term.modulator_var);
  const Expr d2_mix = differentiate(gain, term.modulator_var);

  Bindings bind(opts.params.begin(), opts.params.end());
  std::vector<double> in, out, g;
  double max_abs_dmod = 0.0, max_abs_gain = 0.0, max_curv = 0.0;
  const auto pts = detail::halton_points(opts.samples, opts.seed);
  for (const auto& p : pts) {
    const double xm = opts.box.modulator_lo + p[0] * (opts.box.modulator_hi - opts.box.modulator_lo);
    const double xi = opts.box.input_lo + p[1] * (opts.box.input_hi - opts.box.input_lo);
    bind[term.modulator_var] = xm;
    bind[term.input_var] = xi;
    try {
      const double o = evaluate(term.expr, bind);
      const double gv = evaluate(gain, bind);
      const double dm = evaluate(dmod, bind);
      const double c = std::max({std::abs(evaluate(d2_in, bind)), std::abs(evaluate(d2_mod, bind)),
                                 std::abs(evaluate(d2_mix, bind))});
      in.push_back(xi);
      out.push_back(o);
      g.push_back(gv);
      max_abs_dmod = std::max(max_abs_dmod, std::abs(dm));
      max_abs_gain = std::max(max_abs_gain, std::abs(gv));
      max_curv = std::max(max_curv, c);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteResult) throw;
    }
  }
  if (in.size() < kMinResidualSamples)
    throw Error(ErrorCode::TooFewSamples, "term is finite at only " + std::to_string(in.size()) + " sample points");
  if (max_abs_gain < 1e-12)
    throw Error(ErrorCode::DegenerateTerm, "term does not depend on input '" + term.input_var + "'");
  if (max_abs_dmod < 1e-12)
    throw Error(ErrorCode::DegenerateTerm, "term does not depend on modulator '" + term.modulator_var + "'");

  TermClassification result{TermClass::GainModulation, 3, CollapseAxis::None, gain};
  result.samples = in.size();

  const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
  const bool gain_constant = (*gmax - *gmin) < 1e-9 * std::max(1.0, max_abs_gain);
  const bool affine = max_curv < 1e-9 * std::max(1.0, max_abs_gain);
  if (gain_constant && affine) {
    result.term_class = TermClass::NoModulation;
    result.predicted_dim = 2;
    return result;
  }

  // Collapse is accepted in either direction (G of O, or O of G).
  result.residual_vs_output = std::min(functional_residual(out, g), functional_residual(g, out));
  result.residual_vs_input = std::min(functional_residual(in, g), functional_residual(g, in));
  if (result.residual_vs_output < kCollapseThreshold) {
    result.term_class = TermClass::LinearInputModulation;
    result.predicted_dim = 2;
    result.collapse_axis = CollapseAxis::Output;
  } else if (result.residual_vs_input < kCollapseThreshold) {
    result.term_class = TermClass::LinearOutputModulation;
    result.predicted_dim = 2;
    result.collapse_axis = CollapseAxis::Input;
  }
  return result;
}

// Sampling box taken from the bounding box of the observed values.
inline SamplingBox box_from_range(std::span<const double> modulator, std::span<const double> input) {
  auto [mlo, mhi] = std::minmax_element(modulator.begin(), modulator.end());
  auto [ilo, ihi] = std::minmax_element(input.begin(), input.end());
  SamplingBox box{*mlo, *mhi, *ilo, *ihi};
  // A degenerate extent still needs a non-empty box.
  if (box.modulator_hi - box.modulator_lo < 1e-9) {
    box.modulator_lo -= 0.5;
    box.modulator_hi += 0.5;
  }
  if (box.input_hi - box.input_lo < 1e-9) {
    box.input_lo -= 0.5;
    box.input_hi += 0.5;
  }
  return box;
}

}  // namespace modphase
