// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

namespace flextime::app {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

struct PlotFrame {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 760;
  int height = 360;
};

std::string xml_escape(const std::string& text);

/// Overlaid line plots sharing one pair of axes.
std::string line_plot(const PlotFrame& frame, const std::vector<Series>& series);

/// Saliency as a colour strip over frequency, with the normalized signal spectrum
/// drawn on top. Bins flagged in `ground_truth` (optional) are marked under the strip.
std::string spectrum_heatmap(const PlotFrame& frame, std::span<const double> freqs_hz, std::span<const double> saliency,
                             std::span<const double> magnitude, const std::vector<bool>& ground_truth = {});

}  // namespace flextime::app
