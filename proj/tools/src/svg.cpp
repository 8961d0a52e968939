#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace relaxor::cli {

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double d = std::max(0.5, 0.05 * std::abs(hi));
      lo -= d;
      hi += d;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

// 1-2-5 tick spacing giving roughly `target` intervals
double tick_step(double span, int target = 5) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  if (f < 1.5) return mag;
  if (f < 3.5) return 2.0 * mag;
  if (f < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, double step) {
  if (std::abs(v) < 1e-9 * step) v = 0.0;
  char buf[32];
  const int digits = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
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

const char* dash_array(Stroke s) {
  switch (s) {
    case Stroke::Solid: return nullptr;
    case Stroke::Dashed: return "7 4";
    case Stroke::Dotted: return "1.5 3";
    case Stroke::DashDot: return "8 3 1.5 3";
  }
  return nullptr;
}

void render_panel(std::ostringstream& os, const Panel& panel, double ox, double oy, double w, double h) {
  constexpr double kLeft = 58, kRight = 14, kTop = 28, kBottom = 44;
  const double px0 = ox + kLeft, px1 = ox + w - kRight;
  const double py0 = oy + kTop, py1 = oy + h - kBottom;

  Range xr, yr;
  for (const auto& s : panel.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& m : panel.markers) {
    xr.add(m.x);
    yr.add(m.y);
  }
  for (double v : panel.hlines) yr.add(v);
  for (double v : panel.vlines) xr.add(v);
  xr.finish();
  yr.finish();

  auto X = [&](double x) { return px0 + (x - xr.lo) / (xr.hi - xr.lo) * (px1 - px0); };
  auto Y = [&](double y) { return py1 - (y - yr.lo) / (yr.hi - yr.lo) * (py1 - py0); };

  os << "<g>\n";
  os << "<rect x=\"" << num(px0) << "\" y=\"" << num(py0) << "\" width=\"" << num(px1 - px0) << "\" height=\""
     << num(py1 - py0) << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  // ticks
  const double xs = tick_step(xr.hi - xr.lo), ys = tick_step(yr.hi - yr.lo);
  for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi; v += xs) {
    os << "<line x1=\"" << num(X(v)) << "\" y1=\"" << num(py1) << "\" x2=\"" << num(X(v)) << "\" y2=\""
       << num(py1 + 4) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(X(v)) << "\" y=\"" << num(py1 + 16) << "\" font-size=\"10\" text-anchor=\"middle\">"
       << tick_label(v, xs) << "</text>\n";
  }
  for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi; v += ys) {
    os << "<line x1=\"" << num(px0 - 4) << "\" y1=\"" << num(Y(v)) << "\" x2=\"" << num(px0) << "\" y2=\""
       << num(Y(v)) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(px0 - 6) << "\" y=\"" << num(Y(v) + 3.5)
       << "\" font-size=\"10\" text-anchor=\"end\">" << tick_label(v, ys) << "</text>\n";
  }

  os << "<text x=\"" << num((px0 + px1) / 2) << "\" y=\"" << num(oy + h - 10)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(panel.xlabel) << "</text>\n";
  os << "<text x=\"" << num(ox + 14) << "\" y=\"" << num((py0 + py1) / 2) << "\" font-size=\"12\" "
     << "text-anchor=\"middle\" transform=\"rotate(-90 " << num(ox + 14) << ' ' << num((py0 + py1) / 2) << ")\">"
     << escape(panel.ylabel) << "</text>\n";
  if (!panel.title.empty()) {
    os << "<text x=\"" << num((px0 + px1) / 2) << "\" y=\"" << num(oy + 18)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(panel.title) << "</text>\n";
  }

  for (double v : panel.hlines) {
    os << "<line x1=\"" << num(px0) << "\" y1=\"" << num(Y(v)) << "\" x2=\"" << num(px1) << "\" y2=\"" << num(Y(v))
       << "\" stroke=\"#aaa\" stroke-width=\"0.8\"/>\n";
  }
  for (double v : panel.vlines) {
    os << "<line x1=\"" << num(X(v)) << "\" y1=\"" << num(py0) << "\" x2=\"" << num(X(v)) << "\" y2=\"" << num(py1)
       << "\" stroke=\"#aaa\" stroke-width=\"0.8\"/>\n";
  }

  for (const auto& s : panel.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.scatter) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << "<circle cx=\"" << num(X(s.x[i])) << "\" cy=\"" << num(Y(s.y[i])) << "\" r=\"1.8\" fill=\"" << s.color
           << "\"/>\n";
      }
      continue;
    }
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.width) << '"';
    if (const char* d = dash_array(s.stroke)) os << " stroke-dasharray=\"" << d << '"';
    os << " points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << num(X(s.x[i])) << ',' << num(Y(s.y[i])) << ' ';
    }
    os << "\"/>\n";
  }

  for (const auto& m : panel.markers) {
    os << "<circle cx=\"" << num(X(m.x)) << "\" cy=\"" << num(Y(m.y)) << "\" r=\"3.5\" fill=\"#000\"/>\n";
    if (!m.label.empty()) {
      os << "<text x=\"" << num(X(m.x) + 6) << "\" y=\"" << num(Y(m.y) - 6) << "\" font-size=\"12\">"
         << escape(m.label) << "</text>\n";
    }
  }

  // legend
  double ly = py0 + 14;
  for (const auto& s : panel.series) {
    if (s.label.empty()) continue;
    const double lx = px1 - 110;
    if (s.scatter) {
      os << "<circle cx=\"" << num(lx + 11) << "\" cy=\"" << num(ly - 3.5) << "\" r=\"2.5\" fill=\"" << s.color
         << "\"/>\n";
    } else {
      os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 3.5) << "\" x2=\"" << num(lx + 22) << "\" y2=\""
         << num(ly - 3.5) << "\" stroke=\"" << s.color << "\" stroke-width=\"" << num(s.width) << '"';
      if (const char* d = dash_array(s.stroke)) os << " stroke-dasharray=\"" << d << '"';
      os << "/>\n";
    }
    os << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly) << "\" font-size=\"11\">" << escape(s.label)
       << "</text>\n";
    ly += 15;
  }
  os << "</g>\n";
}

}  // namespace

std::string render_svg(const Figure& fig) {
  const int cols = std::max(1, std::min<int>(fig.columns, static_cast<int>(fig.panels.size())));
  const int rows = static_cast<int>((fig.panels.size() + cols - 1) / cols);
  const double W = cols * fig.panel_width, H = std::max(1, rows) * fig.panel_height;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
     << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t i = 0; i < fig.panels.size(); ++i) {
    const double ox = static_cast<double>(i % cols) * fig.panel_width;
    const double oy = static_cast<double>(i / cols) * fig.panel_height;
    render_panel(os, fig.panels[i], ox, oy, fig.panel_width, fig.panel_height);
  }
  os << "</svg>\n";
  return os.str();
}

Series decimate(Series s, std::size_t max_points) {
  const std::size_t n = std::min(s.x.size(), s.y.size());
  if (n <= max_points || max_points < 2) return s;
  const std::size_t stride = (n + max_points - 2) / (max_points - 1);
  Series out = s;
  out.x.clear();
  out.y.clear();
  for (std::size_t i = 0; i < n; i += stride) {
    out.x.push_back(s.x[i]);
    out.y.push_back(s.y[i]);
  }
  if (out.x.back() != s.x[n - 1] || out.y.back() != s.y[n - 1]) {
    out.x.push_back(s.x[n - 1]);
    out.y.push_back(s.y[n - 1]);
  }
  return out;
}

}  // namespace relaxor::cli
