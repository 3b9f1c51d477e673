#include "exot/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace exot {
namespace {

constexpr double kWidth = 800, kHeight = 600;
constexpr double kLeft = 80, kRight = 30, kTop = 50, kBottom = 70;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
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
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = i < s.err.size() && std::isfinite(s.err[i]) ? s.err[i] : 0.0;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (chart.reference) {
    y0 = std::min(y0, *chart.reference);
    y1 = std::max(y1, *chart.reference);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
  os << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  os << "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">" << escape(chart.title) << "</text>\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
     << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
     << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 20) << "\" text-anchor=\"middle\" font-size=\"12\">"
       << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"12\">"
       << tick(yv) << "</text>\n";
  }
  os << "<text x=\"400\" y=\"" << num(kHeight - 20) << "\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(chart.x_label) << "</text>\n";
  os << "<text x=\"20\" y=\"300\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 300)\">"
     << escape(chart.y_label) << "</text>\n";
  if (chart.reference) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(*chart.reference)) << "\" x2=\"" << num(kLeft + pw)
       << "\" y2=\"" << num(py(*chart.reference)) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << num(kLeft + pw - 4) << "\" y=\"" << num(py(*chart.reference) - 6)
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"gray\">" << escape(chart.reference_label) << "</text>\n";
  }
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kPalette[s % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      os << (i ? " " : "") << num(px(series.x[i])) << ',' << num(py(series.y[i]));
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      os << "<circle cx=\"" << num(px(series.x[i])) << "\" cy=\"" << num(py(series.y[i])) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
      if (i < series.err.size() && std::isfinite(series.err[i]) && series.err[i] > 0) {
        os << "<line x1=\"" << num(px(series.x[i])) << "\" y1=\"" << num(py(series.y[i] - series.err[i]))
           << "\" x2=\"" << num(px(series.x[i])) << "\" y2=\"" << num(py(series.y[i] + series.err[i]))
           << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    os << "<text x=\"" << num(kLeft + 10) << "\" y=\"" << num(kTop + 16 + 16 * static_cast<double>(s))
       << "\" font-size=\"12\" fill=\"" << color << "\">" << escape(series.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace exot
