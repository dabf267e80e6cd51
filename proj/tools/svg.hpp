#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace modphase::svg {

struct Point {
  double x;
  double y;
};

struct Style {
  Style(std::string stroke_ = "black", double width_ = 1.0, std::string dash_ = {}, std::string fill_ = "none",
        double opacity_ = 1.0)
      : stroke(std::move(stroke_)), width(width_), dash(std::move(dash_)), fill(std::move(fill_)), opacity(opacity_) {}

  std::string stroke;
  double width;
  std::string dash;  // stroke-dasharray, empty for solid
  std::string fill;
  double opacity;
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Linear map from data coordinates onto a rectangular plot area.
struct Viewport {
  double left, top, width, height;
  double x0, x1, y0, y1;

  Point map(double x, double y) const {
    return {left + (x - x0) / (x1 - x0) * width, top + height - (y - y0) / (y1 - y0) * height};
  }
};

inline std::pair<double, double> padded_range(double lo, double hi, double frac = 0.05) {
  if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
  const double pad = (hi - lo) * frac;
  return {lo - pad, hi + pad};
}

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void line(Point a, Point b, const Style& st) {
    body_ += "<line x1=\"" + num(a.x) + "\" y1=\"" + num(a.y) + "\" x2=\"" + num(b.x) + "\" y2=\"" + num(b.y) +
             "\"" + attrs(st) + "/>\n";
  }

  void polyline(const std::vector<Point>& pts, const Style& st) {
    if (pts.size() < 2) return;
    body_ += "<polyline points=\"" + points(pts) + "\"" + attrs(st) + "/>\n";
  }

  void polygon(const std::vector<Point>& pts, const Style& st) {
    if (pts.size() < 3) return;
    body_ += "<polygon points=\"" + points(pts) + "\"" + attrs(st) + "/>\n";
  }

  void circle(Point c, double r, const Style& st) {
    body_ += "<circle cx=\"" + num(c.x) + "\" cy=\"" + num(c.y) + "\" r=\"" + num(r) + "\"" + attrs(st) + "/>\n";
  }

  void text(Point at, std::string_view s, double size = 12.0, std::string_view anchor = "start") {
    body_ += "<text x=\"" + num(at.x) + "\" y=\"" + num(at.y) + "\" font-family=\"sans-serif\" font-size=\"" +
             num(size) + "\" text-anchor=\"" + std::string(anchor) + "\">" + escape(s) + "</text>\n";
  }

  // Frame, tick labels at the ends of each axis, and axis titles.
  void axes(const Viewport& vp, std::string_view xlabel, std::string_view ylabel) {
    Style frame;
    frame.stroke = "#444";
    body_ += "<rect x=\"" + num(vp.left) + "\" y=\"" + num(vp.top) + "\" width=\"" + num(vp.width) + "\" height=\"" +
             num(vp.height) + "\"" + attrs(frame) + "/>\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", vp.x0);
    text({vp.left, vp.top + vp.height + 14}, buf, 10, "start");
    std::snprintf(buf, sizeof buf, "%.3g", vp.x1);
    text({vp.left + vp.width, vp.top + vp.height + 14}, buf, 10, "end");
    std::snprintf(buf, sizeof buf, "%.3g", vp.y0);
    text({vp.left - 4, vp.top + vp.height}, buf, 10, "end");
    std::snprintf(buf, sizeof buf, "%.3g", vp.y1);
    text({vp.left - 4, vp.top + 10}, buf, 10, "end");
    text({vp.left + vp.width / 2, vp.top + vp.height + 30}, xlabel, 12, "middle");
    body_ += "<text x=\"" + num(vp.left - 34) + "\" y=\"" + num(vp.top + vp.height / 2) +
             "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " +
             num(vp.left - 34) + " " + num(vp.top + vp.height / 2) + ")\">" + escape(ylabel) + "</text>\n";
  }

  std::string str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

 private:
  static std::string attrs(const Style& st) {
    std::string a = " stroke=\"" + st.stroke + "\" stroke-width=\"" + num(st.width) + "\" fill=\"" + st.fill + "\"";
    if (!st.dash.empty()) a += " stroke-dasharray=\"" + st.dash + "\"";
    if (st.opacity < 1.0) a += " opacity=\"" + num(st.opacity) + "\"";
    return a;
  }

  static std::string points(const std::vector<Point>& pts) {
    std::string s;
    for (const auto& p : pts) s += num(p.x) + "," + num(p.y) + " ";
    s.pop_back();
    return s;
  }

  double width_, height_;
  std::string body_;
};

// Blue (low) to red (high) colour ramp, t in [0, 1].
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + 200 * t));
  const int g = static_cast<int>(std::lround(60 + 60 * (1.0 - std::abs(2.0 * t - 1.0))));
  const int b = static_cast<int>(std::lround(240 - 200 * t));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace modphase::svg
