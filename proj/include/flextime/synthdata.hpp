// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "flextime/signal.hpp"

namespace flextime {

/// Voigt profile (Gaussian sigma convolved with Lorentzian half-width gamma) at x.
/// Throws ValidationError when both widths are zero.
double voigt_amplitude(double x, double sigma, double gamma);

/// Same, centred on `peak`.
inline double voigt_amplitude(double freq, double peak, double sigma, double gamma) {
  return voigt_amplitude(freq - peak, sigma, gamma);
}

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
Complex faddeeva(Complex z);

/// Generator settings. Frequencies are in DFT-index units over [0, T/2].
struct SynthConfig {
  std::size_t length = 2000;
  double sample_rate = 2000.0;
  std::size_t bin_count = 32;
  std::array<std::size_t, 4> salient_bins{4, 11, 18, 26};
  std::size_t tones_per_bin = 20;
  std::size_t bins_min = 1;
  std::size_t bins_max = 10;
  double noise_std = 0.01;
  std::optional<double> voigt_sigma;  // default bin_width / 8
  std::optional<double> voigt_gamma;  // default bin_width / 8
  std::uint64_t seed = 0;

  double bin_width() const { return static_cast<double>(length) / 2.0 / static_cast<double>(bin_count); }
  double sigma() const { return voigt_sigma.value_or(bin_width() / 8.0); }
  double gamma() const { return voigt_gamma.value_or(bin_width() / 8.0); }
  std::size_t class_count() const { return std::size_t{1} << salient_bins.size(); }
  void validate() const;
};

struct SynthSample {
  TimeSeries ts;
  int label = 0;
  std::vector<std::size_t> sampled_bins;  // ascending
  std::vector<bool> ground_truth_bins;    // [X]: sampled salient bins
  std::vector<bool> ground_truth_freq;    // [K]: DFT bins inside sampled salient bins
};

/// Bits follow the order of cfg.salient_bins: bit i is set when salient_bins[i] was sampled.
int label_for_bins(const SynthConfig& cfg, const std::vector<std::size_t>& sampled_bins);

/// Ground-truth mask on the one-sided DFT grid for a set of salient bins.
std::vector<bool> ground_truth_frequencies(const SynthConfig& cfg, const std::vector<std::size_t>& bins);

/// Draws the number of active bins and which ones (ascending).
std::vector<std::size_t> sample_bins(const SynthConfig& cfg, std::mt19937_64& rng);

/// Waveform for the given active bins: Voigt-weighted tones per bin, peak-normalized per bin, plus noise.
SynthSample synthesize(const SynthConfig& cfg, std::vector<std::size_t> bins, std::mt19937_64& rng);

SynthSample generate_sample(const SynthConfig& cfg, std::mt19937_64& rng);

/// Independent stream for sample `index` of split `split` under `seed`.
std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t split, std::uint64_t index);

struct SynthSplit {
  std::vector<SynthSample> samples;

  std::vector<TimeSeries> inputs() const;
  std::vector<int> labels() const;
  std::vector<std::size_t> class_counts(std::size_t classes) const;
};

struct SynthDataset {
  SynthSplit train, val, test;
};

inline constexpr std::uint64_t kTrainSplit = 0;
inline constexpr std::uint64_t kValSplit = 1;
inline constexpr std::uint64_t kTestSplit = 2;

/// i.i.d. train/val; test balanced over all classes by rejection sampling, in seeded random order.
/// Throws NumericError when a class cannot be filled within `attempt_budget` draws per test sample.
SynthDataset generate_dataset(const SynthConfig& cfg, std::size_t n_train, std::size_t n_val,
                              std::size_t n_test_balanced, std::size_t workers = 1,
                              std::size_t attempt_budget = 2000);

SynthSplit generate_iid(const SynthConfig& cfg, std::uint64_t split, std::size_t n, std::size_t workers = 1);
SynthSplit generate_balanced(const SynthConfig& cfg, std::uint64_t split, std::size_t n, std::size_t workers = 1,
                             std::size_t attempt_budget = 2000);

}  // namespace flextime
