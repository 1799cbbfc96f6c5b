#include "rockfrag/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rockfrag/error.hpp"

namespace rockfrag {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
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
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

}  // namespace

std::string render_svg(const Plot& plot) {
  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = plot.width - left - right, ph = plot.height - top - bottom;
  if (pw <= 0 || ph <= 0) throw InputError("svg: plot too small");

  auto tx = [&](double x) { return plot.log_x ? std::log10(x) : x; };
  Range xr, yr;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_x && !(s.x[i] > 0))) continue;
      xr.add(tx(s.x[i]));
      yr.add(s.y[i]);
    }
  if (!xr.valid()) xr = {0.0, 1.0};
  if (!yr.valid()) yr = {0.0, 1.0};
  if (xr.hi - xr.lo < 1e-12) xr = {xr.lo - 0.5, xr.hi + 0.5};
  if (yr.hi - yr.lo < 1e-12) yr = {yr.lo - 0.5, yr.hi + 0.5};
  const double ypad = 0.05 * (yr.hi - yr.lo);
  yr = {yr.lo - ypad, yr.hi + ypad};

  auto px = [&](double x) { return left + (tx(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) + "\" height=\"" +
       std::to_string(plot.height) + "\" viewBox=\"0 0 " + std::to_string(plot.width) + " " +
       std::to_string(plot.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(plot.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(plot.title) + "</text>\n";
  o += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  std::vector<double> xt;
  if (plot.log_x) {
    for (double d = std::floor(xr.lo); d <= std::ceil(xr.hi); d += 1.0)
      for (double m : {1.0, 2.0, 5.0}) {
        const double v = std::log10(m) + d;
        if (v >= xr.lo - 1e-9 && v <= xr.hi + 1e-9) xt.push_back(std::pow(10.0, v));
      }
  } else {
    xt = linear_ticks(xr.lo, xr.hi);
  }
  for (double v : xt) {
    const double x = px(v);
    o += "<line x1=\"" + num(x) + "\" y1=\"" + num(top) + "\" x2=\"" + num(x) + "\" y2=\"" + num(top + ph) +
         "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" + label(v) +
         "</text>\n";
  }
  for (double v : linear_ticks(yr.lo, yr.hi)) {
    const double y = py(v);
    o += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + pw) + "\" y2=\"" + num(y) +
         "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label(v) +
         "</text>\n";
  }
  o += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(plot.height - 12.0) + "\" text-anchor=\"middle\">" +
       escape(plot.x_label) + "</text>\n";
  o += "<text transform=\"translate(16," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(plot.y_label) + "</text>\n";

  double legend_y = top + 14;
  for (const auto& s : plot.series) {
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_x && !(s.x[i] > 0))) continue;
      if (s.markers)
        o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"3.5\" fill=\"" + s.color +
             "\"/>\n";
      else
        pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    }
    if (!pts.empty()) {
      pts.pop_back();
      o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
    }
    if (!s.name.empty()) {
      o += "<rect x=\"" + num(left + pw - 150) + "\" y=\"" + num(legend_y - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
           s.color + "\"/>\n";
      o += "<text x=\"" + num(left + pw - 135) + "\" y=\"" + num(legend_y) + "\">" + escape(s.name) + "</text>\n";
      legend_y += 16;
    }
  }
  o += "</svg>\n";
  return o;
}

}  // namespace rockfrag
