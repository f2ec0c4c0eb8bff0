#include "tgcmpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace tgcmpc::plot {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

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
    if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else if (c == '&') {
      out += "&amp;";
    } else {
      out += c;
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
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, int width, int panel_height) {
  const double left = 60, right = 150, top = 28, bottom = 34;
  const int height = panel_height * static_cast<int>(std::max<std::size_t>(panels.size(), 1));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& pn = panels[p];
    const double y0 = p * panel_height;
    Range rx, ry;
    for (const auto& s : pn.series) {
      for (double v : s.x) rx.add(v);
      for (double v : s.y) ry.add(v);
    }
    for (const auto& b : pn.bands) {
      for (double v : b.x) rx.add(v);
      for (double v : b.lo) ry.add(v);
      for (double v : b.hi) ry.add(v);
    }
    for (double h : pn.hlines) ry.add(h);
    ry.pad();
    if (!(rx.lo <= rx.hi)) rx = Range{0.0, 1.0};
    if (rx.hi - rx.lo < 1e-12) rx.hi = rx.lo + 1.0;
    const double pw = width - left - right, ph = panel_height - top - bottom;
    auto X = [&](double v) { return left + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto Y = [&](double v) { return y0 + top + (1.0 - (v - ry.lo) / (ry.hi - ry.lo)) * ph; };

    os << "<text x=\"" << num(left) << "\" y=\"" << num(y0 + 16) << "\" font-weight=\"bold\">" << escape(pn.title)
       << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(y0 + top) << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double vy = ry.lo + (ry.hi - ry.lo) * t / 4.0;
      const double vx = rx.lo + (rx.hi - rx.lo) * t / 4.0;
      os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(Y(vy) + 4) << "\" text-anchor=\"end\">" << tick(vy)
         << "</text>\n";
      os << "<text x=\"" << num(X(vx)) << "\" y=\"" << num(y0 + top + ph + 14) << "\" text-anchor=\"middle\">"
         << tick(vx) << "</text>\n";
    }
    if (!pn.xlabel.empty())
      os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(y0 + panel_height - 6)
         << "\" text-anchor=\"middle\">" << escape(pn.xlabel) << "</text>\n";
    for (double h : pn.hlines)
      os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(Y(h)) << "\" y2=\""
         << num(Y(h)) << "\" stroke=\"#999\" stroke-dasharray=\"2,3\"/>\n";

    int color = 0;
    double legend_y = y0 + top + 10;
    auto legend = [&](const std::string& label, const char* c, bool area) {
      os << "<rect x=\"" << num(left + pw + 10) << "\" y=\"" << num(legend_y - 8) << "\" width=\"12\" height=\""
         << (area ? 8 : 2) << "\" fill=\"" << c << "\"" << (area ? " fill-opacity=\"0.25\"" : "") << "/>\n";
      os << "<text x=\"" << num(left + pw + 26) << "\" y=\"" << num(legend_y) << "\">" << escape(label) << "</text>\n";
      legend_y += 14;
    };
    for (const auto& b : pn.bands) {
      const char* c = kColors[color++ % 6];
      os << "<polygon fill=\"" << c << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < b.x.size(); ++i) os << num(X(b.x[i])) << ',' << num(Y(b.hi[i])) << ' ';
      for (std::size_t i = b.x.size(); i-- > 0;) os << num(X(b.x[i])) << ',' << num(Y(b.lo[i])) << ' ';
      os << "\"/>\n";
      if (!b.label.empty()) legend(b.label, c, true);
    }
    for (const auto& s : pn.series) {
      const char* c = kColors[color++ % 6];
      os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
        if (std::isfinite(s.y[i])) os << num(X(s.x[i])) << ',' << num(Y(s.y[i])) << ' ';
      os << "\"/>\n";
      if (!s.label.empty()) legend(s.label, c, false);
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace tgcmpc::plot
