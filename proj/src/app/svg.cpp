// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "flextime/error.hpp"

namespace flextime::app {
namespace {

constexpr double kLeft = 64, kRight = 150, kTop = 36, kBottom = 48;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void widen() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

Range range_of(const std::vector<Series>& series, bool x) {
  Range r{INFINITY, -INFINITY};
  for (const auto& s : series) {
    for (double v : x ? s.x : s.y) {
      if (!std::isfinite(v)) continue;
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  if (!std::isfinite(r.lo)) r = {0.0, 1.0};
  r.widen();
  return r;
}

// Axes, ticks and labels for a plot area of the given size.
std::string frame_svg(const PlotFrame& f, Range xr, Range yr) {
  const double w = f.width - kLeft - kRight, h = f.height - kTop - kBottom;
  std::string s;
  s += "<text x=\"" + num(kLeft) + "\" y=\"22\" font-size=\"15\">" + xml_escape(f.title) + "</text>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = kLeft + w * i / 5.0, fy = kTop + h - h * i / 5.0;
    s += "<line x1=\"" + num(fx) + "\" y1=\"" + num(kTop + h) + "\" x2=\"" + num(fx) + "\" y2=\"" + num(kTop + h + 5) +
         "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + num(fx) + "\" y=\"" + num(kTop + h + 18) + "\" font-size=\"11\" text-anchor=\"middle\">" +
         tick_label(xr.lo + (xr.hi - xr.lo) * i / 5.0) + "</text>\n";
    s += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(fy) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(fy) +
         "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(fy + 4) + "\" font-size=\"11\" text-anchor=\"end\">" +
         tick_label(yr.lo + (yr.hi - yr.lo) * i / 5.0) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + w / 2) + "\" y=\"" + num(f.height - 10.0) +
       "\" font-size=\"12\" text-anchor=\"middle\">" + xml_escape(f.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + h / 2) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + h / 2) + ")\">" + xml_escape(f.y_label) + "</text>\n";
  return s;
}

std::string open_svg(const PlotFrame& f) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(f.width) + "\" height=\"" + std::to_string(f.height) + "\" viewBox=\"0 0 " +
         std::to_string(f.width) + " " + std::to_string(f.height) + "\" font-family=\"sans-serif\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string polyline(std::span<const double> x, std::span<const double> y, Range xr, Range yr, double w, double h,
                     const std::string& color, double width = 1.2) {
  std::string pts;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double px = kLeft + (x[i] - xr.lo) / (xr.hi - xr.lo) * w;
    const double py = kTop + h - (std::clamp(y[i], yr.lo, yr.hi) - yr.lo) / (yr.hi - yr.lo) * h;
    pts += num(px) + "," + num(py) + " ";
  }
  if (!pts.empty()) pts.pop_back();
  return "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) + "\" points=\"" + pts +
         "\"/>\n";
}

// White -> orange -> dark red.
std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = 255 - 75 * t * t;
  const double g = 255 - 230 * t;
  const double b = 255 - 250 * std::sqrt(t);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r), static_cast<int>(g), static_cast<int>(b));
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string line_plot(const PlotFrame& frame, const std::vector<Series>& series) {
  const Range xr = range_of(series, true), yr = range_of(series, false);
  const double w = frame.width - kLeft - kRight, h = frame.height - kTop - kBottom;
  std::string s = open_svg(frame) + frame_svg(frame, xr, yr);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& ser = series[i];
    s += polyline(ser.x, ser.y, xr, yr, w, h, ser.color);
    const double ly = kTop + 14 + 18.0 * static_cast<double>(i);
    const double lx = frame.width - kRight + 12;
    s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 18) + "\" y2=\"" + num(ly - 4) +
         "\" stroke=\"" + ser.color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(lx + 24) + "\" y=\"" + num(ly) + "\" font-size=\"11\">" + xml_escape(ser.label) +
         "</text>\n";
  }
  return s + "</svg>\n";
}

std::string spectrum_heatmap(const PlotFrame& frame, std::span<const double> freqs, std::span<const double> saliency,
                             std::span<const double> magnitude, const std::vector<bool>& ground_truth) {
  detail::require(freqs.size() == saliency.size() && !freqs.empty(), "svg: saliency and frequency grid differ");
  detail::require(magnitude.empty() || magnitude.size() == freqs.size(), "svg: magnitude and frequency grid differ");
  detail::require(ground_truth.empty() || ground_truth.size() == freqs.size(), "svg: ground truth and grid differ");
  const Range xr{freqs.front(), freqs.size() > 1 ? freqs.back() : freqs.front() + 1.0};
  const Range yr{0.0, 1.0};
  const double w = frame.width - kLeft - kRight, h = frame.height - kTop - kBottom;
  std::string s = open_svg(frame) + frame_svg(frame, xr, yr);
  const double peak = *std::max_element(saliency.begin(), saliency.end());
  const double cell = w / static_cast<double>(freqs.size());
  s += "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double t = peak > 0.0 ? saliency[k] / peak : 0.0;
    s += "<rect x=\"" + num(kLeft + cell * static_cast<double>(k)) + "\" y=\"" + num(kTop + 1) + "\" width=\"" +
         num(cell + 0.3) + "\" height=\"" + num(h - 2) + "\" fill=\"" + heat_color(t) + "\"/>\n";
    if (!ground_truth.empty() && ground_truth[k]) {
      s += "<rect x=\"" + num(kLeft + cell * static_cast<double>(k)) + "\" y=\"" + num(kTop + h + 22) +
           "\" width=\"" + num(cell + 0.3) + "\" height=\"4\" fill=\"#2ca02c\"/>\n";
    }
  }
  s += "</g>\n";
  if (!magnitude.empty()) {
    const double mpeak = *std::max_element(magnitude.begin(), magnitude.end());
    std::vector<double> norm(magnitude.begin(), magnitude.end());
    if (mpeak > 0.0) {
      for (double& v : norm) v /= mpeak;
    }
    s += polyline(freqs, norm, xr, yr, w, h, "#1f3b73", 1.0);
  }
  const double lx = frame.width - kRight + 12;
  s += "<rect x=\"" + num(lx) + "\" y=\"" + num(kTop) + "\" width=\"18\" height=\"12\" fill=\"" + heat_color(1.0) +
       "\"/>\n<text x=\"" + num(lx + 24) + "\" y=\"" + num(kTop + 10) + "\" font-size=\"11\">saliency</text>\n";
  s += "<line x1=\"" + num(lx) + "\" y1=\"" + num(kTop + 26) + "\" x2=\"" + num(lx + 18) + "\" y2=\"" +
       num(kTop + 26) + "\" stroke=\"#1f3b73\" stroke-width=\"2\"/>\n<text x=\"" + num(lx + 24) + "\" y=\"" +
       num(kTop + 30) + "\" font-size=\"11\">|DFT| (norm.)</text>\n";
  if (!ground_truth.empty()) {
    s += "<rect x=\"" + num(lx) + "\" y=\"" + num(kTop + 42) + "\" width=\"18\" height=\"4\" fill=\"#2ca02c\"/>\n" +
         "<text x=\"" + num(lx + 24) + "\" y=\"" + num(kTop + 48) + "\" font-size=\"11\">ground truth</text>\n";
  }
  return s + "</svg>\n";
}

}  // namespace flextime::app
