#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "io.hpp"
#include "modphase/modphase.hpp"

#ifndef MODPHASE_VERSION
#define MODPHASE_VERSION "unknown"
#endif

namespace modphase::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Failure whose diagnostics were already printed.
struct ReportedFailure {
  int exit_code;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteState:
    case ErrorCode::StepUnderflow:
    case ErrorCode::NonFiniteResult:
    case ErrorCode::TooShort:
    case ErrorCode::TooFewSamples:
    case ErrorCode::EmptyBins:
    case ErrorCode::GridMismatch:
      return kExitNumeric;
    case ErrorCode::NotOscillatory:
      return kExitNotOscillatory;
    default:
      return kExitConfig;
  }
}

// Runs a command body and maps failures onto exit statuses.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ReportedFailure& f) {
    return f.exit_code;
  } catch (const NonFiniteStateError& e) {
    err << "error: numeric failure: " << e.message() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    err << "error: " << (code == kExitNumeric ? "numeric failure: " : "") << e.what() << "\n";
    return code;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

void print_syntax_error(const SyntaxError& e, std::string_view source, const std::string& origin, std::ostream& err) {
  err << origin << ":" << e.line() << ":" << e.column() << ": error: " << e.detail() << "\n";
  std::size_t begin = 0;
  for (std::size_t l = 1; l < e.line(); ++l) {
    const auto nl = source.find('\n', begin);
    if (nl == std::string_view::npos) break;
    begin = nl + 1;
  }
  auto end = source.find('\n', begin);
  if (end == std::string_view::npos) end = source.size();
  err << "  " << source.substr(begin, end - begin) << "\n";
  err << "  " << std::string(e.column() > 0 ? e.column() - 1 : 0, ' ') << "^\n";
  if (!e.expected().empty()) {
    err << "  expected:";
    for (const auto& x : e.expected()) err << " " << x;
    err << "\n";
  }
}

SystemDef load_system(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.definition.empty() && !cfg.system.empty())
    throw Error(ErrorCode::InvalidArgument, "--system and --def are mutually exclusive");
  if (cfg.definition.empty() && cfg.system.empty())
    throw Error(ErrorCode::InvalidArgument, "one of --system or --def is required");
  if (!cfg.system.empty()) return builtin(cfg.system);
  const std::string text = read_text_file(cfg.definition);
  try {
    return parse_system_definition(text);
  } catch (const SyntaxError& e) {
    print_syntax_error(e, text, cfg.definition, err);
    throw ReportedFailure{kExitConfig};
  }
}

SystemDef resolve_system(const RunConfig& cfg, std::ostream& err) {
  SystemDef sys = load_system(cfg, err);
  if (cfg.perturbation) sys = perturb(sys, cfg.perturbation->param, cfg.perturbation->relative_change);
  return sys;
}

ordered_json params_json(const SystemParams& p) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

ordered_json manifest_json(const RunConfig& cfg, const SystemDef& sys, const std::string& command,
                           std::optional<double> base_value) {
  ordered_json m;
  m["tool"] = "modphase";
  m["version"] = MODPHASE_VERSION;
  m["command"] = command;
  m["system"] = {{"name", sys.name()},
                 {"definition", cfg.definition.empty() ? ordered_json(nullptr) : ordered_json(cfg.definition)},
                 {"state_vars", sys.state_vars()},
                 {"params", params_json(sys.params())}};
  const auto& ic = cfg.integrator;
  m["integrator"] = {{"method", to_string(ic.method)}, {"dt", ic.dt},           {"t_end", ic.t_end},
                     {"transient_fraction", ic.transient_fraction}, {"abs_tol", ic.abs_tol}, {"rel_tol", ic.rel_tol}};
  if (cfg.perturbation && base_value) {
    m["perturbation"] = {{"param", cfg.perturbation->param},
                         {"relative_change", cfg.perturbation->relative_change},
                         {"base_value", *base_value},
                         {"value", sys.params().at(cfg.perturbation->param)}};
  } else {
    m["perturbation"] = nullptr;
  }
  m["seed"] = cfg.seed;
  m["outputs"] = std::vector<std::string>(cfg.outputs.begin(), cfg.outputs.end());
  m["frames"] = cfg.frames;
  return m;
}

std::optional<double> base_param_value(const RunConfig& cfg, std::ostream& err) {
  if (!cfg.perturbation) return std::nullopt;
  RunConfig plain = cfg;
  plain.perturbation.reset();
  const auto sys = load_system(plain, err);
  auto it = sys.params().find(cfg.perturbation->param);
  if (it == sys.params().end()) return std::nullopt;
  return it->second;
}

bool wants(const RunConfig& cfg, const char* what) { return cfg.outputs.count(what) > 0; }

// Everything computed for one system run.
struct Analysis {
  Trajectory trajectory;
  ModulationTrace trace;
  TermClassification classification;
  std::optional<CollapseReport> manifold;
  std::optional<PhaseSeries> phase;
  std::vector<Extremum> extrema;
  std::optional<SymmetryReport> symmetry;
  std::optional<FrameSet> frames;
};

Analysis analyze_system(const SystemDef& sys, const RunConfig& cfg) {
  const auto* term = sys.term();
  if (!term) throw Error(ErrorCode::MissingTerm, "system '" + sys.name() + "' declares no term to analyze");
  auto traj = integrate(sys, sys.default_initial_state(), cfg.integrator);
  auto tr = trace(traj, sys);
  ClassifyOptions opts;
  opts.seed = cfg.seed;
  opts.params = sys.params();
  Analysis a{std::move(traj), std::move(tr), classify_term(*term, opts), {}, {}, {}, {}, {}};
  if (wants(cfg, "manifold")) a.manifold = classify_manifold(a.trace);
  if (wants(cfg, "frames")) a.frames = io_space_frames(a.trajectory, sys, std::max<std::size_t>(cfg.frames, 1));
  if (wants(cfg, "phase") || wants(cfg, "symmetry")) {
    a.phase = analytic_phase(a.trace.output, a.trajectory.dt(), a.trace.times.front());
    if (wants(cfg, "symmetry")) {
      a.extrema = gain_extrema(a.trace);
      a.symmetry = symmetry_score(a.trace, *a.phase);
    }
  }
  return a;
}

ordered_json classification_json(const NonlinearTermDef& term, const TermClassification& c, std::uint64_t seed) {
  return {{"expression", print(term.expr)},
          {"input", term.input_var},
          {"modulator", term.modulator_var},
          {"class", to_string(c.term_class)},
          {"predicted_dim", c.predicted_dim},
          {"collapse_axis", to_string(c.collapse_axis)},
          {"gain_expr", print(c.gain_expr)},
          {"residual_vs_output", c.residual_vs_output},
          {"residual_vs_input", c.residual_vs_input},
          {"samples", c.samples},
          {"seed", seed}};
}

ordered_json report_json(const SystemDef& sys, const Analysis& a, const RunConfig& cfg) {
  ordered_json r;
  r["format"] = "modphase-report";
  r["format_version"] = 1;
  r["system"] = {{"name", sys.name()}, {"params", params_json(sys.params())}};
  r["classification"] = classification_json(*sys.term(), a.classification, cfg.seed);
  if (a.manifold) {
    const auto& m = *a.manifold;
    ordered_json mj;
    mj["verdict"] = to_string(m.verdict);
    mj["dimension"] = manifold_dimension(m.verdict);
    mj["residual_vs_output"] = m.residual_vs_output;
    mj["residual_vs_input"] = m.residual_vs_input;
    mj["threshold"] = kCollapseThreshold;
    mj["fitted_relation"] = m.fitted_relation.empty() ? ordered_json(nullptr) : ordered_json(m.fitted_relation);
    mj["fit_rms"] = m.fit_rms;
    ordered_json table = ordered_json::array();
    for (const auto& p : m.binned_relation) table.push_back({p.x, p.y});
    mj["binned_relation"] = m.binned_relation.empty() ? ordered_json(nullptr) : table;
    mj["agrees_with_classification"] = manifold_dimension(m.verdict) == a.classification.predicted_dim;
    r["manifold"] = mj;
  }
  if (a.phase) {
    r["phase"] = {{"source", "output"},
                  {"period", a.phase->period},
                  {"samples", a.phase->size()},
                  {"interior_begin", a.phase->interior_begin},
                  {"interior_end", a.phase->interior_end}};
  }
  if (a.symmetry) {
    const auto& s = *a.symmetry;
    ordered_json ex = ordered_json::array();
    for (const auto& e : a.extrema)
      ex.push_back({{"index", e.index}, {"time", a.trace.times[e.index]}, {"kind", to_string(e.kind)}});
    r["extrema"] = ex;
    r["extrema_phase_diffs"] = s.extrema_phase_diffs;
    r["symmetry"] = {{"score", s.score},
                     {"axis_phase", s.axis_phase},
                     {"axis_bin", s.axis_bin},
                     {"bins", s.curve.size()},
                     {"empty_bins", s.empty_bins},
                     {"symmetric_threshold", kSymmetricThreshold},
                     {"asymmetric_threshold", kAsymmetricThreshold},
                     {"curve", s.curve}};
  }
  r["notes"] = {
      "symmetry.score is a mirror-asymmetry measure defined by this tool; the thresholds are regression anchors",
      "manifold verdicts use a functional-residual threshold defined by this tool"};
  return r;
}

void write_run(const fs::path& dir, const RunConfig& cfg, const SystemDef& sys, const Analysis& a,
               std::optional<double> base_value, const std::optional<PlasticityReport>& plasticity) {
  fs::create_directories(dir);
  write_text_file(dir / "run_manifest.json", manifest_json(cfg, sys, "analyze", base_value).dump(2) + "\n");
  if (wants(cfg, "trajectory")) write_text_file(dir / "trajectory.csv", trajectory_csv(a.trajectory, sys.state_vars()));
  if (wants(cfg, "trace")) write_text_file(dir / "trace.csv", trace_csv(a.trace));
  if (a.phase && wants(cfg, "phase")) write_text_file(dir / "phase.csv", phase_csv(*a.phase));
  if (a.frames) write_text_file(dir / "frames.json", frames_json(*a.frames).dump() + "\n");
  auto report = report_json(sys, a, cfg);
  if (plasticity) {
    report["plasticity"] = {{"param", cfg.perturbation->param},
                            {"relative_change", cfg.perturbation->relative_change},
                            {"base_score", plasticity->base_score},
                            {"perturbed_score", plasticity->perturbed_score},
                            {"axis_drift", plasticity->axis_drift},
                            {"max_curve_change", plasticity->max_curve_change},
                            {"classification", to_string(plasticity->classification)}};
  }
  write_text_file(dir / "report.json", report.dump(2) + "\n");
}

}  // namespace

Perturbation parse_perturbation(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size())
    throw Error(ErrorCode::InvalidArgument, "--perturb expects <param>:<relative change>, got '" + spec + "'");
  Perturbation p{spec.substr(0, colon), 0.0};
  const std::string num = spec.substr(colon + 1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
  if (ec != std::errc() || end != num.data() + num.size() || !std::isfinite(v))
    throw Error(ErrorCode::InvalidArgument, "malformed relative change '" + num + "'");
  if (!(v > -1.0)) throw Error(ErrorCode::InvalidArgument, "relative change must exceed -1");
  p.relative_change = v;
  return p;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.integrator.validate();
    const SystemDef sys = resolve_system(cfg, err);
    const auto base_value = base_param_value(cfg, err);
    const auto traj = integrate(sys, sys.default_initial_state(), cfg.integrator);
    fs::create_directories(cfg.output_dir);
    write_text_file(cfg.output_dir / "trajectory.csv", trajectory_csv(traj, sys.state_vars()));
    write_text_file(cfg.output_dir / "run_manifest.json",
                    manifest_json(cfg, sys, "simulate", base_value).dump(2) + "\n");
    out << "wrote " << traj.size() << " samples to " << (cfg.output_dir / "trajectory.csv").string() << "\n";
    return kExitOk;
  });
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cfg.integrator.validate();
    RunConfig base_cfg = cfg;
    base_cfg.perturbation.reset();
    const SystemDef base_sys = resolve_system(base_cfg, err);
    if (!cfg.perturbation) {
      const Analysis a = analyze_system(base_sys, cfg);
      write_run(cfg.output_dir, cfg, base_sys, a, std::nullopt, std::nullopt);
      out << "analysis of " << base_sys.name() << " written to " << cfg.output_dir.string() << "\n";
      return kExitOk;
    }
    const SystemDef pert_sys = perturb(base_sys, cfg.perturbation->param, cfg.perturbation->relative_change);
    // Base and perturbed runs are independent; run them side by side.
    auto pert_future = std::async(std::launch::async, [&] { return analyze_system(pert_sys, cfg); });
    std::optional<Analysis> base;
    try {
      base = analyze_system(base_sys, cfg);
    } catch (...) {
      pert_future.wait();
      throw;
    }
    const Analysis pert = pert_future.get();
    std::optional<PlasticityReport> plasticity;
    if (base->symmetry && pert.symmetry) plasticity = phase_plasticity_report(*base->symmetry, *pert.symmetry);
    const double base_value = base_sys.params().at(cfg.perturbation->param);
    write_run(cfg.output_dir, base_cfg, base_sys, *base, std::nullopt, plasticity);
    write_run(cfg.output_dir / "perturbed", cfg, pert_sys, pert, base_value, std::nullopt);
    out << "analysis of " << base_sys.name() << " (base and perturbed) written to " << cfg.output_dir.string() << "\n";
    if (plasticity) out << "phase plasticity: " << to_string(plasticity->classification) << "\n";
    return kExitOk;
  });
}

int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemDef sys = load_system(cfg, err);
    if (sys.terms().empty()) throw Error(ErrorCode::MissingTerm, "definition declares no term");
    ordered_json j;
    j["system"] = sys.name();
    j["terms"] = ordered_json::array();
    for (const auto& term : sys.terms()) {
      ClassifyOptions opts;
      opts.seed = cfg.seed;
      opts.params = sys.params();
      j["terms"].push_back(classification_json(term, classify_term(term, opts), cfg.seed));
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  });
}

namespace {

void add_run_options(CLI::App* sub, RunConfig& cfg, std::string& perturb_spec, std::string& method) {
  sub->add_option("--system", cfg.system, "built-in system name");
  sub->add_option("--def", cfg.definition, "path to a system definition file");
  sub->add_option("--perturb", perturb_spec, "relative parameter change, e.g. d:-0.10");
  sub->add_option("--dt", cfg.integrator.dt, "sample interval")->capture_default_str();
  sub->add_option("--t-end", cfg.integrator.t_end, "integration end time")->capture_default_str();
  sub->add_option("--transient", cfg.integrator.transient_fraction, "fraction of samples dropped as transient")
      ->capture_default_str();
  sub->add_option("--method", method, "integrator: rk4 or dp45")
      ->check(CLI::IsMember({"rk4", "dp45"}))
      ->capture_default_str();
  sub->add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Modulation phase-space analysis of nonlinear oscillators", "modphase"};
  app.set_version_flag("--version", std::string(MODPHASE_VERSION));
  app.require_subcommand(1);

  RunConfig cfg;
  std::string perturb_spec;
  std::string method = "rk4";
  std::vector<std::string> outputs;

  auto* sim = app.add_subcommand("simulate", "integrate a system and write trajectory.csv");
  add_run_options(sim, cfg, perturb_spec, method);

  auto* ana = app.add_subcommand("analyze", "run the full modulation, phase and manifold analysis");
  add_run_options(ana, cfg, perturb_spec, method);
  ana->add_option("--seed", cfg.seed, "seed for quasi-random term sampling")->capture_default_str();
  ana->add_option("--outputs", outputs, "subset of trajectory,trace,phase,symmetry,manifold,frames")
      ->delimiter(',')
      ->check(CLI::IsMember({"trajectory", "trace", "phase", "symmetry", "manifold", "frames"}));
  ana->add_option("--frames", cfg.frames, "number of input/output frames")->capture_default_str();

  auto* cls = app.add_subcommand("classify", "classify the terms of a definition file without simulating");
  cls->add_option("definition", cfg.definition, "definition file");
  cls->add_option("--def", cfg.definition, "definition file");
  cls->add_option("--system", cfg.system, "built-in system name");
  cls->add_option("--seed", cfg.seed, "seed for quasi-random term sampling")->capture_default_str();

  RenderConfig rcfg;
  std::size_t render_frames = 0;
  auto* ren = app.add_subcommand("render", "draw SVG figures from analysis artifacts");
  ren->add_option("--in", rcfg.input_dir, "directory written by analyze")->required();
  ren->add_option("--out", rcfg.output_dir, "output directory (default: --in)");
  ren->add_option("--figure", rcfg.figure, "io_space, iog_views, timeseries_gain or polar_phase_gain")
      ->required()
      ->transform(CLI::CheckedTransformer(std::map<std::string, Figure>{{"io_space", Figure::IoSpace},
                                                                        {"iog_views", Figure::IogViews},
                                                                        {"timeseries_gain", Figure::TimeseriesGain},
                                                                        {"polar_phase_gain", Figure::PolarPhaseGain}}));
  auto* frames_opt = ren->add_option("--frames", render_frames, "io_space frames to draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const int pre = guarded(err, [&] {
    cfg.integrator.method = method == "dp45" ? IntegrationMethod::DormandPrince45 : IntegrationMethod::RK4Fixed;
    if (!perturb_spec.empty()) cfg.perturbation = parse_perturbation(perturb_spec);
    if (!outputs.empty()) cfg.outputs = std::set<std::string>(outputs.begin(), outputs.end());
    return kExitOk;
  });
  if (pre != kExitOk) return pre;

  if (sim->parsed()) return cmd_simulate(cfg, out, err);
  if (ana->parsed()) return cmd_analyze(cfg, out, err);
  if (cls->parsed()) return cmd_classify(cfg, out, err);
  if (rcfg.output_dir.empty()) rcfg.output_dir = rcfg.input_dir;
  if (frames_opt->count() > 0) rcfg.frames = render_frames;
  return cmd_render(rcfg, out, err);
}

}  // namespace modphase::cli
