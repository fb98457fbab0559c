#include "bora/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace bora::svg {
namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string tick_label(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
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
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= f * mag) return f * mag;
  }
  return 10.0 * mag;
}

}  // namespace

const char* palette(std::size_t index) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  return colors[index % (sizeof colors / sizeof colors[0])];
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render(const Plot& plot) {
  Range xr;
  Range yr;
  for (const auto& b : plot.bands) {
    for (double v : b.x) xr.add(v);
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (std::isfinite(b.lower[i]) && std::isfinite(b.upper[i])) {
        yr.add(b.lower[i]);
        yr.add(b.upper[i]);
      }
    }
  }
  for (const auto& l : plot.lines) {
    for (double v : l.x) xr.add(v);
    for (double v : l.y) yr.add(v);
  }
  for (const auto& m : plot.markers) {
    for (double v : m.x) xr.add(v);
    for (double v : m.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  const double left = 70, right = 160, top = 40, bottom = 55;
  const double pw = plot.width - left - right;
  const double ph = plot.height - top - bottom;
  auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) {
    y = std::clamp(y, yr.lo, yr.hi);
    return top + (yr.hi - y) / (yr.hi - yr.lo) * ph;
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << escape_xml(plot.title) << "</text>\n";

  // Axes and ticks.
  out << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const double xstep = nice_step(xr.hi - xr.lo, 8);
  for (double v = std::ceil(xr.lo / xstep) * xstep; v <= xr.hi + 1e-9 * xstep; v += xstep) {
    out << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(v))
        << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#444\"/>"
        << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
  }
  const double ystep = nice_step(yr.hi - yr.lo, 6);
  for (double v = std::ceil(yr.lo / ystep) * ystep; v <= yr.hi + 1e-9 * ystep; v += ystep) {
    out << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(sy(v)) << "\" stroke=\"#444\"/>"
        << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(v) + 4)
        << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
  }
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(plot.height - 12.0)
      << "\" text-anchor=\"middle\">" << escape_xml(plot.x_label) << "</text>\n"
      << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" "
      << "text-anchor=\"middle\">" << escape_xml(plot.y_label) << "</text>\n</g>\n";

  for (const auto& b : plot.bands) {
    std::size_t i = 0;
    while (i < b.x.size()) {
      while (i < b.x.size() && !(std::isfinite(b.lower[i]) && std::isfinite(b.upper[i]))) ++i;
      std::size_t j = i;
      while (j < b.x.size() && std::isfinite(b.lower[j]) && std::isfinite(b.upper[j])) ++j;
      if (j > i) {
        out << "<polygon fill=\"" << b.color << "\" fill-opacity=\"" << num(b.opacity)
            << "\" stroke=\"none\" points=\"";
        for (std::size_t k = i; k < j; ++k) out << num(sx(b.x[k])) << ',' << num(sy(b.upper[k])) << ' ';
        for (std::size_t k = j; k-- > i;) out << num(sx(b.x[k])) << ',' << num(sy(b.lower[k])) << ' ';
        out << "\"/>\n";
      }
      i = j;
    }
  }

  for (const auto& l : plot.lines) {
    std::size_t i = 0;
    while (i < l.x.size()) {
      while (i < l.x.size() && !std::isfinite(l.y[i])) ++i;
      std::size_t j = i;
      while (j < l.x.size() && std::isfinite(l.y[j])) ++j;
      if (j > i) {
        out << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.8\"";
        if (l.dashed) out << " stroke-dasharray=\"6,4\"";
        out << " points=\"";
        for (std::size_t k = i; k < j; ++k) out << num(sx(l.x[k])) << ',' << num(sy(l.y[k])) << ' ';
        out << "\"/>\n";
      }
      i = j;
    }
  }

  for (const auto& m : plot.markers) {
    for (std::size_t k = 0; k < m.x.size(); ++k) {
      if (!std::isfinite(m.y[k])) continue;
      out << "<circle class=\"marker\" cx=\"" << num(sx(m.x[k])) << "\" cy=\"" << num(sy(m.y[k]))
          << "\" r=\"4\" fill=\"" << m.color << "\"/>\n";
    }
  }

  // Legend.
  double ly = top + 10;
  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& l : plot.lines) {
    out << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(left + pw + 36) << "\" y2=\"" << num(ly) << "\" stroke=\"" << l.color
        << "\" stroke-width=\"2\"" << (l.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>"
        << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">"
        << escape_xml(l.label) << "</text>\n";
    ly += 18;
  }
  for (const auto& m : plot.markers) {
    out << "<circle cx=\"" << num(left + pw + 24) << "\" cy=\"" << num(ly) << "\" r=\"4\" fill=\""
        << m.color << "\"/><text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">"
        << escape_xml(m.label) << "</text>\n";
    ly += 18;
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace bora::svg
