// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flextime/signal.hpp"

namespace flextime {

/// Linear-phase FIR filter. Odd tap count, so the group delay (N - 1) / 2 is an integer.
struct FirFilter {
  std::vector<double> taps;
  double low_hz = 0.0;
  double high_hz = 0.0;
  double sample_rate = 1.0;

  std::size_t size() const { return taps.size(); }
  std::size_t group_delay() const { return (taps.size() - 1) / 2; }
};

/// L equal-width bands from DC to Nyquist. Band l covers [l * fN / L, (l + 1) * fN / L].
struct Filterbank {
  std::vector<FirFilter> filters;
  std::vector<double> band_edges;  // L + 1 ascending, 0 .. Nyquist
  double sample_rate = 1.0;

  std::size_t band_count() const { return filters.size(); }
  std::size_t tap_count() const { return filters.empty() ? 0 : filters.front().size(); }
  std::size_t group_delay() const { return (tap_count() - 1) / 2; }

  void validate() const;
};

/// One weight in [0, 1] per filterbank band.
struct BandMask {
  std::vector<double> values;

  static BandMask ones(std::size_t bands) { return {std::vector<double>(bands, 1.0)}; }
  static BandMask zeros(std::size_t bands) { return {std::vector<double>(bands, 0.0)}; }
  static BandMask one_hot(std::size_t bands, std::size_t band);
  void validate(std::size_t expected_bands) const;
};

/// Per-band filtered copies of a signal, delay compensated. Layout [L x T x V].
struct BandDecomposition {
  std::vector<double> bands;
  std::size_t band_count = 0;
  std::size_t length = 0;
  std::size_t channels = 1;
  std::size_t group_delay = 0;
  double sample_rate = 1.0;

  std::span<const double> band(std::size_t l) const {
    return {bands.data() + l * length * channels, length * channels};
  }
  std::span<double> band(std::size_t l) {
    return {bands.data() + l * length * channels, length * channels};
  }
};

/// Smallest odd tap count >= n (even counts are bumped by one).
std::size_t odd_tap_count(std::size_t n);

/// Hamming-windowed sinc lowpass, normalized to unit DC gain.
FirFilter design_lowpass(double cutoff_hz, std::size_t taps, double sample_rate);

/// Difference of two lowpasses. low == 0 gives a lowpass; high == Nyquist gives
/// a highpass built as delayed unit impulse minus lowpass.
FirFilter design_bandpass(double low_hz, double high_hz, std::size_t taps, double sample_rate);

/// Ideal bandpass impulse response truncated to `taps` samples (rectangular window).
/// This is what zeroing DFT bins outside the band amounts to for a finite signal.
FirFilter design_truncated_ideal(double low_hz, double high_hz, std::size_t taps, double sample_rate);

Filterbank design_filterbank(std::size_t bands, std::size_t taps, double sample_rate);

/// Smallest tap count accepted by design_filterbank.
inline constexpr std::size_t kMinFilterbankTaps = 5;

// "Same"-length zero-padded convolution shifted left by (N - 1) / 2:
//   y[t] = sum_k taps[k] * x[t + (N - 1) / 2 - k]
std::vector<double> convolve_same_direct(std::span<const double> x, std::span<const double> taps);
std::vector<double> convolve_same_fft(std::span<const double> x, std::span<const double> taps);
/// Dispatches to the FFT path once T * N exceeds `fft_threshold` multiply-adds.
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> taps,
                                  std::size_t fft_threshold = std::size_t{1} << 18);

BandDecomposition decompose(const TimeSeries& ts, const Filterbank& fb);

/// X^M = sum_l m_l * band_l + (1 - m_l) * p_l. An empty perturbation means p = 0;
/// otherwise it has the decomposition's [L x T x V] layout.
TimeSeries masked_reconstruct(const BandDecomposition& dec, const BandMask& mask,
                              std::span<const double> perturbation = {});

/// Complex response sum_n taps[n] e^{-i 2 pi f n / fs} at each frequency.
std::vector<Complex> frequency_response(std::span<const double> taps, std::span<const double> freqs_hz,
                                        double sample_rate);

/// Mask-weighted sum of all band taps.
std::vector<double> masked_taps(const Filterbank& fb, const BandMask& mask);

/// |H_M(f)| on `grid_size` evenly spaced points over [0, Nyquist].
std::vector<double> collected_response(const Filterbank& fb, const BandMask& mask, std::size_t grid_size);

/// |H_M(f)| at arbitrary frequencies.
std::vector<double> collected_response_at(const Filterbank& fb, const BandMask& mask,
                                          std::span<const double> freqs_hz);

struct StopbandComparison {
  double fir_attenuation_db = 0.0;
  double dft_zeroing_attenuation_db = 0.0;
  double fir_guard_hz = 0.0;
  double dft_guard_hz = 0.0;
};

/// Worst-case stopband leakage of a Hamming bandpass vs an equal-length truncated
/// ideal bandpass. Each is measured beyond its own window's main-lobe half-width
/// from the band edges (2 / N for Hamming, 1 / N for rectangular, in cycles per sample).
StopbandComparison stopband_comparison(std::size_t taps, double low_hz, double high_hz, double sample_rate);

/// Magnitude of `taps` on a dense grid of `points` over [0, Nyquist] via zero-padded FFT.
std::vector<double> dense_magnitude_response(std::span<const double> taps, std::size_t points);

}  // namespace flextime
