#include "svg.hpp"

#include <array>
#include <cstdio>
#include <sstream>

namespace rarefit::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 24.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 52.0;

constexpr std::array<const char*, 6> kColours = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b"};

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
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double xspan = axes.x_max > axes.x_min ? axes.x_max - axes.x_min : 1.0;
  const double yspan = axes.y_max > axes.y_min ? axes.y_max - axes.y_min : 1.0;
  auto px = [&](double x) { return kLeft + (x - axes.x_min) / xspan * pw; };
  auto py = [&](double y) { return kTop + ph - (y - axes.y_min) / yspan * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(axes.title) << "</text>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = axes.x_min + xspan * i / 5.0;
    const double fy = axes.y_min + yspan * i / 5.0;
    o << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(fx))
      << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"#eee\"/>\n";
    o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(fy)) << "\" x2=\""
      << num(kLeft + pw) << "\" y2=\"" << num(py(fy)) << "\" stroke=\"#eee\"/>\n";
    o << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kTop + ph + 16)
      << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(fy) + 4)
      << "\" text-anchor=\"end\">" << tick(fy) << "</text>\n";
  }
  o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12)
    << "\" text-anchor=\"middle\">" << escape(axes.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << num(kTop + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(axes.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* colour = kColours[s % kColours.size()];
    o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
      if (sr.steps && i > 0) o << num(px(sr.x[i])) << ',' << num(py(sr.y[i - 1])) << ' ';
      o << num(px(sr.x[i])) << ',' << num(py(sr.y[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = kTop + 14 + 16.0 * static_cast<double>(s);
    o << "<line x1=\"" << num(kLeft + pw - 150) << "\" y1=\"" << num(ly) << "\" x2=\""
      << num(kLeft + pw - 130) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(kLeft + pw - 124) << "\" y=\"" << num(ly + 4) << "\">"
      << escape(sr.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace rarefit::svg
