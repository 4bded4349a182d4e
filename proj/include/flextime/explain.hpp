// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flextime/filterbank.hpp"
#include "flextime/model.hpp"
#include "flextime/signal.hpp"

namespace flextime {

/// Per-iteration record of a mask optimization.
struct OptimizerTrace {
  std::vector<double> objective;   // entry 0 is the initial objective
  std::vector<double> distortion;
  std::size_t halvings = 0;        // total step halvings across all iterations
  bool stalled = false;            // stopped early: no descent even after halving
  bool finite_difference = false;  // model exposed no input gradient
};

/// Saliency over the one-sided frequency grid of the explained signal.
struct Explanation {
  std::string method;
  std::size_t target_class = 0;
  std::vector<double> saliency;          // [K], finite and >= 0
  std::vector<double> channel_saliency;  // optional [K x V]
  std::size_t channels = 1;
  std::vector<double> mask;              // learned mask (band mask or per-bin mask), if any
  std::vector<double> attribution;       // signed per-bin attribution for gradient methods
  OptimizerTrace trace;

  double initial_objective() const { return trace.objective.empty() ? 0.0 : trace.objective.front(); }
  double final_objective() const { return trace.objective.empty() ? 0.0 : trace.objective.back(); }

  void validate() const;
};

struct FlexConfig {
  std::size_t bands = 32;       // L
  std::size_t taps = 501;       // N
  double ratio = 0.1;           // r
  std::size_t iterations = 1000;
  double step_size = 1.0;
  std::size_t max_halvings = 5;

  void validate() const;
};

struct DynamaskFreqConfig {
  double ratio = 0.1;           // r_a
  std::size_t window = 10;      // W, half-width of the moving average
  std::size_t iterations = 1000;
  double step_size = 1.0;
  std::size_t max_halvings = 5;

  void validate() const;
};

struct FreqRiseConfig {
  std::size_t n_masks = 3000;
  std::size_t grid_size = 64;
  double keep_probability = 0.5;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate() const;
};

enum class GradientMethod { Saliency, GradientXInput, IntegratedGradients };

std::string to_string(GradientMethod method);
GradientMethod gradient_method_from_string(const std::string& name);

/// -yhat_l * log(max(yhatM_l, 1e-12)).
double distortion_loss(std::span<const double> yhat, std::span<const double> yhat_masked, std::size_t target_class);

/// max(mean(m) - r, 0).
double sparsity_penalty(std::span<const double> mask, double ratio);

struct FlexResult {
  BandMask mask;
  Explanation explanation;
};

/// Learns a band mask that keeps the model's prediction for `target_class`
/// (the predicted class when empty) while using at most a fraction r of the bands.
FlexResult flextime_explain(const Classifier& model, const TimeSeries& ts, const Filterbank& fb,
                            std::optional<std::size_t> target_class, const FlexConfig& cfg);

/// Same objective over a per-bin DFT mask, with a moving-average perturbation.
Explanation dynamask_freq_explain(const Classifier& model, const TimeSeries& ts,
                                  std::optional<std::size_t> target_class, const DynamaskFreqConfig& cfg);

/// Randomized coarse frequency masks weighted by the target probability.
Explanation freqrise_explain(const Classifier& model, const TimeSeries& ts, std::optional<std::size_t> target_class,
                             const FreqRiseConfig& cfg);

/// Attributions of the target probability with respect to the DFT coefficients.
/// Throws UnsupportedError when the model has no input gradient.
Explanation gradient_explain(GradientMethod method, const Classifier& model, const TimeSeries& ts,
                             std::optional<std::size_t> target_class, std::size_t ig_steps = 50);

/// Gradient of the target-class probability with respect to the input samples.
std::vector<double> probability_input_gradient(const Classifier& model, const TimeSeries& ts, std::size_t target_class,
                                               double* probability = nullptr);

/// Maps a time-domain gradient g (layout [T x V]) to d/dc_j = (w_j / T) * rfft(g)_j, [K x V].
std::vector<Complex> spectral_gradient(std::span<const double> gradient, std::size_t length, std::size_t channels);

}  // namespace flextime
