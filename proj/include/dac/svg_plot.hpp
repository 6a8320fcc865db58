#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dac/report.hpp"

namespace dac {

// Self-contained SVG learning-curve plot: one mean line per agent with a
// +/- one-standard-deviation band, no plotting dependency.
inline std::string curves_svg(const std::vector<CurvePoint>& points,
                              const std::string& title = "mean return per agent") {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  const int width = 860, height = 520;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  int n_agents = 0;
  for (const CurvePoint& p : points) n_agents = std::max(n_agents, p.agent + 1);
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const CurvePoint& p : points) {
    const double sd = std::sqrt(std::max(0.0, p.var_return));
    x_lo = std::min(x_lo, static_cast<double>(p.iteration));
    x_hi = std::max(x_hi, static_cast<double>(p.iteration));
    y_lo = std::min(y_lo, p.mean_return - sd);
    y_hi = std::max(y_hi, p.mean_return + sd);
  }
  if (points.empty() || x_hi <= x_lo) {
    x_lo = 0;
    x_hi = 1;
  }
  if (y_hi <= y_lo) {
    y_lo -= 1;
    y_hi += 1;
  }
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto sx = [&](double x) {
    return ml + (x - x_lo) / (x_hi - x_lo) * (width - ml - mr);
  };
  auto sy = [&](double y) {
    return height - mb - (y - y_lo) / (y_hi - y_lo) * (height - mt - mb);
  };
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";

  // axes with five ticks each
  svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(height - mb)
      << "\" x2=\"" << num(width - mr) << "\" y2=\"" << num(height - mb)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\""
      << num(ml) << "\" y2=\"" << num(height - mb)
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_lo + (x_hi - x_lo) * k / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * k / 4.0;
    svg << "<line x1=\"" << num(sx(xv)) << "\" y1=\"" << num(height - mb)
        << "\" x2=\"" << num(sx(xv)) << "\" y2=\"" << num(height - mb + 5)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(height - mb + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << num(xv) << "</text>\n";
    svg << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(sy(yv))
        << "\" x2=\"" << num(ml) << "\" y2=\"" << num(sy(yv))
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(sy(yv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"13\">actor iteration</text>\n";

  for (int agent = 0; agent < n_agents; ++agent) {
    std::vector<const CurvePoint*> series;
    for (const CurvePoint& p : points)
      if (p.agent == agent) series.push_back(&p);
    if (series.empty()) continue;
    const char* color = kPalette[agent % 8];

    std::ostringstream band;
    band << "M";
    for (const CurvePoint* p : series)
      band << " " << num(sx(p->iteration)) << ","
           << num(sy(p->mean_return + std::sqrt(std::max(0.0, p->var_return))));
    for (auto it = series.rbegin(); it != series.rend(); ++it)
      band << " " << num(sx((*it)->iteration)) << ","
           << num(sy((*it)->mean_return -
                     std::sqrt(std::max(0.0, (*it)->var_return))));
    band << " Z";
    svg << "<path d=\"" << band.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const CurvePoint* p : series)
      svg << num(sx(p->iteration)) << "," << num(sy(p->mean_return)) << " ";
    svg << "\"/>\n";

    svg << "<text x=\"" << width - mr - 90 << "\" y=\"" << mt + 16 * agent
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
        << "\">agent " << agent << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace dac
