// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace flextime {

using Complex = std::complex<double>;

/// Number of one-sided DFT bins for a real signal of `length` samples.
constexpr std::size_t bin_count(std::size_t length) { return length / 2 + 1; }

/// Real multichannel signal, row-major [T x V]: sample (t, v) lives at t * V + v.
struct TimeSeries {
  std::vector<double> samples;
  std::size_t length = 0;
  std::size_t channels = 1;
  double sample_rate = 1.0;

  TimeSeries() = default;
  TimeSeries(std::size_t length, std::size_t channels, double sample_rate = 1.0);
  TimeSeries(std::vector<double> samples, std::size_t length, std::size_t channels,
             double sample_rate = 1.0);

  static TimeSeries mono(std::vector<double> samples, double sample_rate = 1.0);

  double& at(std::size_t t, std::size_t v) { return samples[t * channels + v]; }
  double at(std::size_t t, std::size_t v) const { return samples[t * channels + v]; }

  /// Copy of channel `v` as a contiguous vector.
  std::vector<double> channel(std::size_t v) const;
  void set_channel(std::size_t v, std::span<const double> values);

  /// Throws ValidationError unless T >= 2, V >= 1, finite samples, positive rate.
  void validate() const;
};

/// One-sided spectrum of a real signal, row-major [K x V].
struct Spectrum {
  std::vector<Complex> coefficients;
  std::size_t bins = 0;
  std::size_t channels = 1;
  std::size_t origin_length = 0;
  double sample_rate = 1.0;

  Complex& at(std::size_t k, std::size_t v) { return coefficients[k * channels + v]; }
  Complex at(std::size_t k, std::size_t v) const { return coefficients[k * channels + v]; }

  void validate() const;
};

/// Perturbation spectrum p_j blended into masked bins; same shape as the spectrum it perturbs.
using PerturbationSpectrum = Spectrum;

/// Per-bin keep weights in [0, 1].
struct FrequencyMask {
  std::vector<double> values;

  static FrequencyMask ones(std::size_t bins) { return {std::vector<double>(bins, 1.0)}; }
  static FrequencyMask zeros(std::size_t bins) { return {std::vector<double>(bins, 0.0)}; }
  void validate(std::size_t expected_bins) const;
};

// Single-channel real FFT primitives. Unnormalized forward, 1/T on the inverse.
void rfft(std::span<const double> signal, std::span<Complex> out);
void irfft(std::span<const Complex> spectrum, std::span<double> out);
std::vector<Complex> rfft(std::span<const double> signal);
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t length);

Spectrum forward_dft(const TimeSeries& ts);
TimeSeries inverse_dft(const Spectrum& spec);

/// A zero perturbation shaped like `spec`.
PerturbationSpectrum zero_perturbation(const Spectrum& spec);

/// inverse_dft of m_j * c_j + (1 - m_j) * p_j, per bin and channel.
TimeSeries dft_mask_apply(const Spectrum& spec, const FrequencyMask& mask,
                          const PerturbationSpectrum& perturbation);

/// Mean magnitude over bins [j - W, j + W] (truncated at the edges), carrying bin j's phase.
PerturbationSpectrum moving_average_perturbation(const Spectrum& spec,
                                                 std::size_t window_half_width);

/// Frequency in Hz of one-sided bin `k` for a length-`length` transform.
inline double bin_frequency(std::size_t k, std::size_t length, double sample_rate) {
  return static_cast<double>(k) * sample_rate / static_cast<double>(length);
}

}  // namespace flextime
