#include "lmpsh/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace lmpsh {

namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 300.0;
constexpr double kLeft = 55.0;
constexpr double kRight = 110.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 45.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

void panel(std::ostringstream& os, const SvgPanel& p, double ox, double oy) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : p.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (p.ymin) ymin = *p.ymin;
  if (p.ymax) ymax = *p.ymax;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pw = kPanelW - kLeft - kRight;
  const double ph = kPanelH - kTop - kBottom;
  auto X = [&](double x) { return ox + kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return oy + kTop + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  os << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(oy + kTop) << "\" width=\"" << num(pw) << "\" height=\""
     << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(oy + 18) << "\" text-anchor=\"middle\">"
     << escape(p.title) << "</text>\n";
  os << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(oy + kPanelH - 8)
     << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.xlabel) << "</text>\n";
  os << "<text transform=\"translate(" << num(ox + 12) << "," << num(oy + kTop + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.ylabel) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    os << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(oy + kTop + ph + 14)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << num(ox + kLeft - 4) << "\" y=\"" << num(Y(yv) + 3)
       << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
  }
  for (double h : p.hlines) {
    if (h < ymin || h > ymax) continue;
    os << "<line x1=\"" << num(X(xmin)) << "\" x2=\"" << num(X(xmax)) << "\" y1=\"" << num(Y(h)) << "\" y2=\""
       << num(Y(h)) << "\" stroke=\"#999\" stroke-dasharray=\"2,2\"/>\n";
  }
  double ly = oy + kTop + 10;
  for (const auto& s : p.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += num(X(s.x[i])) + "," + num(Y(std::clamp(s.y[i], ymin, ymax))) + " ";
    }
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"" << pts << "\"/>\n";
    if (!s.label.empty()) {
      const double lx = ox + kLeft + pw + 8;
      os << "<line x1=\"" << num(lx) << "\" x2=\"" << num(lx + 16) << "\" y1=\"" << num(ly) << "\" y2=\"" << num(ly)
         << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
         << "/>\n";
      os << "<text x=\"" << num(lx + 20) << "\" y=\"" << num(ly + 3) << "\" font-size=\"10\">" << escape(s.label)
         << "</text>\n";
      ly += 14;
    }
  }
}

}  // namespace

std::string render_svg(const std::vector<SvgPanel>& panels, int columns) {
  columns = std::max(1, columns);
  const int rows = std::max(1, static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) /
                                                static_cast<std::size_t>(columns)));
  const int cols = std::min<int>(columns, std::max<int>(1, static_cast<int>(panels.size())));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(cols * kPanelW) << "\" height=\""
     << num(rows * kPanelH) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = static_cast<double>(i % static_cast<std::size_t>(columns)) * kPanelW;
    const double oy = static_cast<double>(i / static_cast<std::size_t>(columns)) * kPanelH;
    panel(os, panels[i], ox, oy);
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace lmpsh
