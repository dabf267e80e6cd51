#include <cmath>
#include <cstdio>
#include <numbers>

#include "cli.hpp"
#include "io.hpp"
#include "modphase/error.hpp"
#include "svg.hpp"

namespace modphase::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxPolylinePoints = 4000;

std::size_t stride_for(std::size_t n) { return std::max<std::size_t>(1, n / kMaxPolylinePoints); }

std::pair<double, double> range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing artifact '" + p.string() + "'");
}

CsvTable load_trace(const fs::path& dir) {
  const auto path = dir / "trace.csv";
  require_file(path);
  auto t = read_csv(path);
  if (t.rows() < 2) throw IoError("'" + path.string() + "' holds no samples");
  for (const char* c : {"time", "input", "modulator", "output", "gain"}) t.column(c);
  return t;
}

json load_report(const fs::path& dir) {
  const auto path = dir / "report.json";
  require_file(path);
  return read_json(path);
}

std::string fmt(const char* f, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// I/O curve at the current modulator value over the envelope of
// all curves, the cycle in red and the tangent in green.
void render_io_space(const fs::path& in, const fs::path& out, std::optional<std::size_t> max_frames) {
  const auto path = in / "frames.json";
  require_file(path);
  const json fj = read_json(path);
  const auto trace = load_trace(in);
  const auto grid = fj.at("grid").get<std::vector<double>>();
  const auto lo = fj.at("envelope_lo").get<std::vector<double>>();
  const auto hi = fj.at("envelope_hi").get<std::vector<double>>();
  const auto& frames = fj.at("frames");
  if (grid.size() < 2 || frames.empty()) throw IoError("'" + path.string() + "' holds no frames");

  const auto [x0, x1] = range_of(grid);
  auto [y0, y1] = range_of(lo);
  y1 = std::max(y1, range_of(hi).second);
  const auto [oy0, oy1] = range_of(trace.column("output"));
  const auto yr = svg::padded_range(std::min(y0, oy0), std::max(y1, oy1));
  const svg::Viewport vp{60, 30, 480, 360, x0, x1, yr.first, yr.second};

  const std::size_t n = max_frames ? std::min(*max_frames, frames.size()) : frames.size();
  const auto& zin = trace.column("input");
  const auto& oout = trace.column("output");
  for (std::size_t f = 0; f < n; ++f) {
    const auto& fr = frames[f];
    svg::Document doc(580, 440);
    std::vector<svg::Point> env;
    for (std::size_t k = 0; k < grid.size(); ++k) env.push_back(vp.map(grid[k], hi[k]));
    for (std::size_t k = grid.size(); k-- > 0;) env.push_back(vp.map(grid[k], lo[k]));
    doc.polygon(env, {"none", 0.0, "", "#cccccc", 0.6});

    const auto curve = fr.at("curve").get<std::vector<double>>();
    std::vector<svg::Point> pts;
    for (std::size_t k = 0; k < grid.size(); ++k) pts.push_back(vp.map(grid[k], curve[k]));
    doc.polyline(pts, {"black", 1.5});

    std::vector<svg::Point> cyc;
    for (std::size_t i = 0; i < zin.size(); i += stride_for(zin.size())) cyc.push_back(vp.map(zin[i], oout[i]));
    doc.polyline(cyc, {"#d62728", 1.2});

    const double z = fr.at("input"), o = fr.at("output"), g = fr.at("slope");
    const double half = 0.15 * (x1 - x0);
    doc.line(vp.map(z - half, o - g * half), vp.map(z + half, o + g * half), {"#2ca02c", 1.5});
    doc.circle(vp.map(z, o), 3.5, {"black", 1.0, "", "black"});
    doc.axes(vp, "input", "output");
    doc.text({60, 20}, "t = " + fmt("%.2f", fr.at("time").get<double>()) +
                           ", modulator = " + fmt("%.3f", fr.at("modulator").get<double>()), 12);
    char name[48];
    std::snprintf(name, sizeof name, "io_space_%03zu.svg", f);
    write_text_file(out / name, doc.str());
  }
}

// Three 2-D projections of the input/output/gain trajectory.
void render_iog_views(const fs::path& in, const fs::path& out) {
  const auto trace = load_trace(in);
  const auto& I = trace.column("input");
  const auto& O = trace.column("output");
  const auto& G = trace.column("gain");
  struct Panel {
    const std::vector<double>* x;
    const std::vector<double>* y;
    const char* xl;
    const char* yl;
  };
  const Panel panels[] = {{&I, &O, "input", "output"}, {&I, &G, "input", "gain"}, {&O, &G, "output", "gain"}};
  svg::Document doc(1020, 380);
  double left = 60;
  for (const auto& p : panels) {
    const auto xr = svg::padded_range(range_of(*p.x).first, range_of(*p.x).second);
    const auto yr = svg::padded_range(range_of(*p.y).first, range_of(*p.y).second);
    const svg::Viewport vp{left, 30, 280, 280, xr.first, xr.second, yr.first, yr.second};
    std::vector<svg::Point> pts;
    for (std::size_t i = 0; i < p.x->size(); i += stride_for(p.x->size())) pts.push_back(vp.map((*p.x)[i], (*p.y)[i]));
    doc.polyline(pts, {"#d62728", 1.0});
    doc.axes(vp, p.xl, p.yl);
    left += 340;
  }
  write_text_file(out / "iog_views.svg", doc.str());
}

// Output against time with gain colour-coded and gain extrema marked.
void render_timeseries_gain(const fs::path& in, const fs::path& out) {
  const auto trace = load_trace(in);
  const json report = load_report(in);
  const auto& t = trace.column("time");
  const auto& O = trace.column("output");
  const auto& G = trace.column("gain");
  // The last few cycles keep the figure readable.
  std::size_t begin = 0;
  if (report.contains("phase")) {
    const double period = report["phase"].at("period");
    const double dt = t[1] - t[0];
    const auto span = static_cast<std::size_t>(std::llround(5.0 * period / dt));
    if (span < t.size()) begin = t.size() - span;
  }
  std::vector<double> tw(t.begin() + static_cast<std::ptrdiff_t>(begin), t.end());
  std::vector<double> ow(O.begin() + static_cast<std::ptrdiff_t>(begin), O.end());
  std::vector<double> gw(G.begin() + static_cast<std::ptrdiff_t>(begin), G.end());
  const auto [g0, g1] = range_of(gw);
  const auto yr = svg::padded_range(range_of(ow).first, range_of(ow).second, 0.12);
  const svg::Viewport vp{60, 30, 760, 320, tw.front(), tw.back(), yr.first, yr.second};
  svg::Document doc(860, 400);
  const std::size_t step = std::max<std::size_t>(1, tw.size() / 1500);
  for (std::size_t i = 0; i + step < tw.size(); i += step) {
    const double mid = 0.5 * (gw[i] + gw[i + step]);
    const double u = g1 > g0 ? (mid - g0) / (g1 - g0) : 0.5;
    doc.line(vp.map(tw[i], ow[i]), vp.map(tw[i + step], ow[i + step]), {svg::ramp(u), 2.0});
  }
  if (report.contains("extrema")) {
    std::vector<double> unwrapped;
    if (fs::exists(in / "phase.csv")) unwrapped = read_csv(in / "phase.csv").column("unwrapped");
    std::optional<std::size_t> prev;
    for (const auto& e : report["extrema"]) {
      const std::size_t idx = e.at("index");
      if (idx < begin || idx >= t.size()) continue;
      const svg::Point p = vp.map(t[idx], O[idx]);
      doc.circle(p, 4, {"black", 1.0, "", e.at("kind") == "max" ? "black" : "white"});
      if (prev && idx < unwrapped.size()) {
        double d = std::fmod(unwrapped[idx] - unwrapped[*prev], 2.0 * std::numbers::pi);
        if (d <= 0.0) d += 2.0 * std::numbers::pi;
        const double xm = 0.5 * (vp.map(t[*prev], 0.0).x + p.x);
        doc.text({xm, vp.top + vp.height - 6}, fmt("%.2f", d), 9, "middle");
      }
      prev = idx;
    }
  }
  doc.axes(vp, "time", "output");
  doc.text({60, 20}, "gain: blue low, red high; filled = gain max, open = gain min; labels = phase gaps (rad)", 11);
  write_text_file(out / "timeseries_gain.svg", doc.str());
}

// Normalized gain against phase in polar form: radius |G|, dotted where G < 0.
void draw_polar_curve(svg::Document& doc, const std::vector<double>& curve, double cx, double cy, double r,
                      const std::string& colour, const std::string& positive_dash) {
  const std::size_t m = curve.size();
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t k2 = (k + 1) % m;
    const double a1 = -std::numbers::pi + (static_cast<double>(k) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(m);
    const double a2 = a1 + 2.0 * std::numbers::pi / static_cast<double>(m);
    const double r1 = std::abs(curve[k]) * r, r2 = std::abs(curve[k2]) * r;
    const bool negative = curve[k] < 0.0 && curve[k2] < 0.0;
    doc.line({cx + r1 * std::cos(a1), cy - r1 * std::sin(a1)}, {cx + r2 * std::cos(a2), cy - r2 * std::sin(a2)},
             {colour, 1.6, negative ? "1,3" : positive_dash});
  }
}

void render_polar(const fs::path& in, const fs::path& out) {
  const json base = load_report(in);
  if (!base.contains("symmetry")) throw IoError("report.json has no symmetry section");
  std::optional<json> pert;
  if (fs::exists(in / "perturbed" / "report.json")) {
    pert = load_report(in / "perturbed");
    if (!pert->contains("symmetry")) pert.reset();
  }
  svg::Document doc(460, 480);
  const double cx = 230, cy = 250, r = 180;
  for (double f : {0.25, 0.5, 0.75, 1.0}) doc.circle({cx, cy}, f * r, {"#dddddd", 0.8});
  for (int k = 0; k < 8; ++k) {
    const double a = k * std::numbers::pi / 4;
    doc.line({cx, cy}, {cx + r * std::cos(a), cy - r * std::sin(a)}, {"#dddddd", 0.8});
  }
  const auto draw_axis = [&](const json& rep, const std::string& colour) {
    const double a = rep["symmetry"].at("axis_phase");
    doc.line({cx - r * std::cos(a), cy + r * std::sin(a)}, {cx + r * std::cos(a), cy - r * std::sin(a)},
             {colour, 0.8, "4,4"});
  };
  draw_polar_curve(doc, base["symmetry"].at("curve").get<std::vector<double>>(), cx, cy, r, "black", "");
  draw_axis(base, "black");
  std::string caption = "base score " + fmt("%.3f", base["symmetry"].at("score").get<double>());
  if (pert) {
    draw_polar_curve(doc, (*pert)["symmetry"].at("curve").get<std::vector<double>>(), cx, cy, r, "#d62728", "6,4");
    draw_axis(*pert, "#d62728");
    caption += ", perturbed score " + fmt("%.3f", (*pert)["symmetry"].at("score").get<double>());
  }
  if (base.contains("plasticity")) caption += " (" + base["plasticity"].at("classification").get<std::string>() + ")";
  doc.text({20, 24}, "normalized gain vs phase of output", 13);
  doc.text({20, 42}, caption, 11);
  doc.text({cx + r + 4, cy + 4}, "0", 10);
  doc.text({cx - r - 4, cy + 4}, "pi", 10, "end");
  write_text_file(out / "polar_phase_gain.svg", doc.str());
}

}  // namespace

int cmd_render(const RenderConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::is_directory(cfg.input_dir)) throw IoError("input directory '" + cfg.input_dir.string() + "' not found");
    fs::create_directories(cfg.output_dir);
    switch (cfg.figure) {
      case Figure::IoSpace: render_io_space(cfg.input_dir, cfg.output_dir, cfg.frames); break;
      case Figure::IogViews: render_iog_views(cfg.input_dir, cfg.output_dir); break;
      case Figure::TimeseriesGain: render_timeseries_gain(cfg.input_dir, cfg.output_dir); break;
      case Figure::PolarPhaseGain: render_polar(cfg.input_dir, cfg.output_dir); break;
    }
    out << "figures written to " << cfg.output_dir.string() << "\n";
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "error: malformed artifact: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitConfig;
}

}  // namespace modphase::cli
