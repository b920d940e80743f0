#include "subcrit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "subcrit/error.hpp"

namespace subcrit::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

void header(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
}

void axes(std::ostringstream& o, const Range& xr, const Range& yr, const std::string& xl, const std::string& yl) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double px = x0 + f * (x1 - x0);
    const double py = y0 - f * (y0 - y1);
    o << "<text x=\"" << px << "\" y=\"" << y0 + 15 << "\" text-anchor=\"middle\">"
      << num(xr.lo + f * (xr.hi - xr.lo)) << "</text>\n";
    o << "<text x=\"" << x0 - 5 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
      << num(yr.lo + f * (yr.hi - yr.lo)) << "</text>\n";
  }
  o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(xl)
    << "</text>\n";
  o << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(yl) << "</text>\n";
}

}  // namespace

std::string render(const LinePlot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& r : plot.references) yr.add(r.second);
  xr.finish();
  yr.finish();
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
  auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };

  std::ostringstream o;
  header(o, plot.title);
  axes(o, xr, yr, plot.x_label, plot.y_label);
  for (const auto& [name, value] : plot.references) {
    o << "<line x1=\"" << x0 << "\" x2=\"" << x1 << "\" y1=\"" << py(value) << "\" y2=\"" << py(value)
      << "\" stroke=\"grey\" stroke-dasharray=\"4 3\"/>\n";
    o << "<text x=\"" << x1 - 3 << "\" y=\"" << py(value) - 3 << "\" text-anchor=\"end\" fill=\"grey\">"
      << escape(name) << "</text>\n";
  }
  std::size_t colour = 0;
  for (const auto& s : plot.series) {
    const char* c = kPalette[colour++ % std::size(kPalette)];
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : " M") + num(px(s.x[i])) + " " + num(py(s.y[i]));
      pen = true;
      o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
    }
    if (!d.empty()) o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(colour);
    o << "<line x1=\"" << x1 + 10 << "\" x2=\"" << x1 + 28 << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\""
      << c << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << x1 + 32 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render(const Heatmap& map) {
  Range vr;
  for (const auto& row : map.values)
    for (double v : row) vr.add(v);
  if (!(vr.lo <= vr.hi)) vr.lo = 0, vr.hi = 1;
  if (vr.hi == vr.lo) vr.hi = vr.lo + 1;

  Range xr, yr;
  for (double v : map.x) xr.add(v);
  for (double v : map.y) yr.add(v);
  xr.finish();
  yr.finish();

  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double cols = static_cast<double>(std::max<std::size_t>(map.x.size(), 1));
  const double rows = static_cast<double>(std::max<std::size_t>(map.y.size(), 1));
  const double cw = (x1 - x0) / cols;
  const double ch = (y0 - y1) / rows;

  std::ostringstream o;
  header(o, map.title);
  for (std::size_t r = 0; r < map.values.size(); ++r) {
    for (std::size_t c = 0; c < map.values[r].size(); ++c) {
      const double v = map.values[r][c];
      std::string fill = "#cccccc";
      if (std::isfinite(v)) {
        // white -> dark blue
        const double f = (v - vr.lo) / (vr.hi - vr.lo);
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * (1 - 0.9 * f)),
                      static_cast<int>(255 * (1 - 0.7 * f)), static_cast<int>(255 * (1 - 0.3 * f)));
        fill = buf;
      }
      o << "<rect x=\"" << x0 + cw * static_cast<double>(c) << "\" y=\"" << y0 - ch * static_cast<double>(r + 1)
        << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  // axes label the grid ends rather than cell centres
  Range xa{map.x.empty() ? 0 : map.x.front(), map.x.empty() ? 1 : map.x.back()};
  Range ya{map.y.empty() ? 0 : map.y.front(), map.y.empty() ? 1 : map.y.back()};
  axes(o, xa, ya, map.x_label, map.y_label);
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double y = y0 - f * (y0 - y1);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * (1 - 0.9 * f)),
                  static_cast<int>(255 * (1 - 0.7 * f)), static_cast<int>(255 * (1 - 0.3 * f)));
    o << "<rect x=\"" << x1 + 15 << "\" y=\"" << y - 6 << "\" width=\"14\" height=\"12\" fill=\"" << buf << "\"/>\n";
    o << "<text x=\"" << x1 + 34 << "\" y=\"" << y + 4 << "\">" << num(vr.lo + f * (vr.hi - vr.lo)) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write(const std::filesystem::path& path, const std::string& svg_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out << svg_text;
}

}  // namespace subcrit::svg
