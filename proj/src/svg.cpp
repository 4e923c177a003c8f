#include "momsurv/svg.hpp"

#include "momsurv/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace momsurv::svg {

namespace {

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Roughly five round tick values spanning [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / 5.0;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  double step = magnitude;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * magnitude;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return out;
}

std::string num(double v) {
  return io::format_double(std::round(v * 100.0) / 100.0);
}

}  // namespace

LinePlot::LinePlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void LinePlot::set_x_range(double lo, double hi) {
  x_lo_ = lo;
  x_hi_ = hi;
  x_fixed_ = true;
}

void LinePlot::set_y_range(double lo, double hi) {
  y_lo_ = lo;
  y_hi_ = hi;
  y_fixed_ = true;
}

void LinePlot::add(Series series) {
  series_.push_back(std::move(series));
}

void LinePlot::add_vline(double x, std::string label, std::string color, bool dashed) {
  Series s;
  s.x = {x, x};
  s.y = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  s.label = std::move(label);
  s.color = std::move(color);
  s.dashed = dashed;
  series_.push_back(std::move(s));
}

std::string LinePlot::render(int width, int height) const {
  double x_lo = x_lo_, x_hi = x_hi_, y_lo = y_lo_, y_hi = y_hi_;
  if (!x_fixed_ || !y_fixed_) {
    double xl = std::numeric_limits<double>::infinity(), xh = -xl, yl = xl, yh = -xl;
    for (const auto& s : series_) {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (std::isfinite(s.x[k])) {
          xl = std::min(xl, s.x[k]);
          xh = std::max(xh, s.x[k]);
        }
        if (std::isfinite(s.y[k])) {
          yl = std::min(yl, s.y[k]);
          yh = std::max(yh, s.y[k]);
        }
      }
    }
    if (!x_fixed_ && std::isfinite(xl)) {
      x_lo = xl;
      x_hi = xh > xl ? xh : xl + 1.0;
    }
    if (!y_fixed_ && std::isfinite(yl)) {
      y_lo = std::min(0.0, yl);
      y_hi = yh > y_lo ? yh * 1.05 : y_lo + 1.0;
    }
  }

  const double left = 60, right = 20, top = 36, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double t : ticks(x_lo, x_hi)) {
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << num(px(t)) << "\" y2=\""
        << top + ph + 5 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << num(px(t)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << io::format_double(t) << "</text>\n";
  }
  for (double t : ticks(y_lo, y_hi)) {
    out << "<line x1=\"" << left - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << left << "\" y2=\"" << num(py(t))
        << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
        << io::format_double(t) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << escape(x_label_) << "</text>\n";
  out << "<text x=\"15\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << top + ph / 2 << ")\">" << escape(y_label_) << "</text>\n";

  out << "<defs><clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
      << "\" height=\"" << ph << "\"/></clipPath></defs>\n";
  out << "<g clip-path=\"url(#plot)\">\n";
  for (const auto& s : series_) {
    std::ostringstream points;
    const bool vline = s.x.size() == 2 && std::isnan(s.y[0]);
    if (vline) {
      points << num(px(s.x[0])) << "," << num(py(y_lo)) << " " << num(px(s.x[0])) << "," << num(py(y_hi));
    } else {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
        if (s.step && k > 0) points << num(px(s.x[k])) << "," << num(py(s.y[k - 1])) << " ";
        points << num(px(s.x[k])) << "," << num(py(s.y[k])) << " ";
      }
    }
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.width << "\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << points.str() << "\"/>\n";
  }
  out << "</g>\n";

  double ly = top + 14;
  for (const auto& s : series_) {
    if (s.label.empty()) continue;
    out << "<line x1=\"" << left + pw - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw - 125 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    out << "<text x=\"" << left + pw - 120 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace momsurv::svg
