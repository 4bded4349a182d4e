// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flextime/error.hpp"
#include "flextime/log.hpp"

namespace flextime {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

double hamming(std::size_t n, std::size_t size) {
  if (size == 1) return 1.0;
  return 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(size - 1));
}

void check_taps(std::size_t taps) {
  detail::require(taps >= 1 && taps % 2 == 1,
                  "filter length must be odd, got " + std::to_string(taps));
}

void check_rate(double sample_rate) {
  detail::require(std::isfinite(sample_rate) && sample_rate > 0.0, "sample rate must be positive");
}

// Windowed ideal lowpass, cutoff as a fraction of the sample rate (0 .. 0.5].
std::vector<double> lowpass_taps(double cutoff_fraction, std::size_t taps, bool windowed) {
  std::vector<double> h(taps);
  const double centre = static_cast<double>(taps - 1) / 2.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double offset = static_cast<double>(n) - centre;
    h[n] = 2.0 * cutoff_fraction * sinc(2.0 * cutoff_fraction * offset);
    if (windowed) h[n] *= hamming(n, taps);
  }
  return h;
}

std::vector<double> unit_impulse(std::size_t taps) {
  std::vector<double> h(taps, 0.0);
  h[(taps - 1) / 2] = 1.0;
  return h;
}

void symmetrize(std::vector<double>& h) {
  const std::size_t n = h.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double avg = 0.5 * (h[i] + h[n - 1 - i]);
    h[i] = avg;
    h[n - 1 - i] = avg;
  }
}

std::size_t next_fast_size(std::size_t n) {
  // Products of 2, 3 and 5 keep FFTW on its fastest codelets.
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace

void Filterbank::validate() const {
  check_rate(sample_rate);
  detail::require(filters.size() >= 2, "Filterbank: need at least 2 bands");
  detail::require(band_edges.size() == filters.size() + 1, "Filterbank: need L + 1 band edges");
  const std::size_t n = filters.front().size();
  check_taps(n);
  for (const auto& f : filters) {
    detail::require(f.size() == n, "Filterbank: all filters must share one length");
  }
  for (std::size_t i = 1; i < band_edges.size(); ++i) {
    detail::require(band_edges[i] > band_edges[i - 1], "Filterbank: band edges must ascend");
  }
}

BandMask BandMask::one_hot(std::size_t bands, std::size_t band) {
  detail::require(band < bands, "BandMask::one_hot: band out of range");
  BandMask m = zeros(bands);
  m.values[band] = 1.0;
  return m;
}

void BandMask::validate(std::size_t expected_bands) const {
  detail::require(values.size() == expected_bands,
                  "BandMask: expected " + std::to_string(expected_bands) + " values, got " +
                      std::to_string(values.size()));
  for (double m : values) {
    detail::require(std::isfinite(m) && m >= 0.0 && m <= 1.0, "BandMask: values must lie in [0, 1]");
  }
}

std::size_t odd_tap_count(std::size_t n) { return n % 2 == 0 ? n + 1 : n; }

FirFilter design_lowpass(double cutoff_hz, std::size_t taps, double sample_rate) {
  check_rate(sample_rate);
  check_taps(taps);
  const double nyquist = sample_rate / 2.0;
  detail::require(std::isfinite(cutoff_hz) && cutoff_hz > 0.0 && cutoff_hz <= nyquist,
                  "design_lowpass: cutoff must lie in (0, Nyquist]");
  auto h = lowpass_taps(cutoff_hz / sample_rate, taps, true);
  double dc = 0.0;
  for (double x : h) dc += x;
  for (double& x : h) x /= dc;
  symmetrize(h);
  return FirFilter{std::move(h), 0.0, cutoff_hz, sample_rate};
}

FirFilter design_bandpass(double low_hz, double high_hz, std::size_t taps, double sample_rate) {
  check_rate(sample_rate);
  check_taps(taps);
  const double nyquist = sample_rate / 2.0;
  detail::require(low_hz >= 0.0 && high_hz <= nyquist && low_hz < high_hz,
                  "design_bandpass: need 0 <= low < high <= Nyquist");
  std::vector<double> upper =
      high_hz >= nyquist ? unit_impulse(taps) : design_lowpass(high_hz, taps, sample_rate).taps;
  if (low_hz > 0.0) {
    const auto lower = design_lowpass(low_hz, taps, sample_rate).taps;
    for (std::size_t n = 0; n < taps; ++n) upper[n] -= lower[n];
  }
  return FirFilter{std::move(upper), low_hz, high_hz, sample_rate};
}

FirFilter design_truncated_ideal(double low_hz, double high_hz, std::size_t taps, double sample_rate) {
  check_rate(sample_rate);
  check_taps(taps);
  const double nyquist = sample_rate / 2.0;
  detail::require(low_hz >= 0.0 && high_hz <= nyquist && low_hz < high_hz,
                  "design_truncated_ideal: need 0 <= low < high <= Nyquist");
  auto h = lowpass_taps(high_hz / sample_rate, taps, false);
  if (low_hz > 0.0) {
    const auto lower = lowpass_taps(low_hz / sample_rate, taps, false);
    for (std::size_t n = 0; n < taps; ++n) h[n] -= lower[n];
  }
  symmetrize(h);
  return FirFilter{std::move(h), low_hz, high_hz, sample_rate};
}

Filterbank design_filterbank(std::size_t bands, std::size_t taps, double sample_rate) {
  check_rate(sample_rate);
  detail::require(bands >= 2, "design_filterbank: need at least 2 bands");
  check_taps(taps);
  detail::require(taps >= kMinFilterbankTaps,
                  "design_filterbank: filter length must be at least " + std::to_string(kMinFilterbankTaps));
  Filterbank fb;
  fb.sample_rate = sample_rate;
  const double nyquist = sample_rate / 2.0;
  fb.band_edges.resize(bands + 1);
  for (std::size_t l = 0; l <= bands; ++l) {
    fb.band_edges[l] = nyquist * static_cast<double>(l) / static_cast<double>(bands);
  }
  fb.band_edges.back() = nyquist;

  // Lowpass prototypes at the interior edges; each band is a difference of neighbours,
  // so the bands telescope to the delayed unit impulse.
  std::vector<std::vector<double>> lowpasses;
  lowpasses.reserve(bands + 1);
  lowpasses.push_back(std::vector<double>(taps, 0.0));
  for (std::size_t l = 1; l < bands; ++l) {
    lowpasses.push_back(design_lowpass(fb.band_edges[l], taps, sample_rate).taps);
  }
  lowpasses.push_back(unit_impulse(taps));

  fb.filters.reserve(bands);
  for (std::size_t l = 0; l < bands; ++l) {
    std::vector<double> h(taps);
    for (std::size_t n = 0; n < taps; ++n) h[n] = lowpasses[l + 1][n] - lowpasses[l][n];
    fb.filters.push_back(FirFilter{std::move(h), fb.band_edges[l], fb.band_edges[l + 1], sample_rate});
  }
  return fb;
}

std::vector<double> convolve_same_direct(std::span<const double> x, std::span<const double> taps) {
  const std::size_t T = x.size();
  const std::size_t N = taps.size();
  detail::require(N >= 1, "convolve: empty filter");
  const std::ptrdiff_t delay = static_cast<std::ptrdiff_t>((N - 1) / 2);
  std::vector<double> y(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    // Source index s = t + delay - k must lie in [0, T).
    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t) + delay;
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, base - static_cast<std::ptrdiff_t>(T) + 1);
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(N) - 1, base);
    double acc = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) acc += taps[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(base - k)];
    y[t] = acc;
  }
  return y;
}

std::vector<double> convolve_same_fft(std::span<const double> x, std::span<const double> taps) {
  const std::size_t T = x.size();
  const std::size_t N = taps.size();
  detail::require(N >= 1, "convolve: empty filter");
  const std::size_t M = next_fast_size(T + N - 1);
  std::vector<double> xp(M, 0.0), hp(M, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(taps.begin(), taps.end(), hp.begin());
  auto X = rfft(xp);
  const auto H = rfft(hp);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= H[k];
  const auto full = irfft(X, M);
  const std::size_t delay = (N - 1) / 2;
  return {full.begin() + static_cast<std::ptrdiff_t>(delay),
          full.begin() + static_cast<std::ptrdiff_t>(delay + T)};
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> taps,
                                  std::size_t fft_threshold) {
  if (x.size() * taps.size() > fft_threshold) return convolve_same_fft(x, taps);
  return convolve_same_direct(x, taps);
}

BandDecomposition decompose(const TimeSeries& ts, const Filterbank& fb) {
  ts.validate();
  fb.validate();
  detail::require(std::abs(ts.sample_rate - fb.sample_rate) <= 1e-9 * fb.sample_rate,
                  "decompose: filterbank sample rate does not match the signal");
  const std::size_t L = fb.band_count();
  const std::size_t T = ts.length;
  const std::size_t V = ts.channels;
  const std::size_t N = fb.tap_count();
  if (T <= N) {
    warn("decompose: signal length " + std::to_string(T) + " does not exceed filter length " +
         std::to_string(N) + "; boundary effects dominate");
  }
  BandDecomposition dec;
  dec.band_count = L;
  dec.length = T;
  dec.channels = V;
  dec.group_delay = fb.group_delay();
  dec.sample_rate = ts.sample_rate;
  dec.bands.assign(L * T * V, 0.0);

  const bool use_fft = T * N > (std::size_t{1} << 18);
  for (std::size_t v = 0; v < V; ++v) {
    const auto x = ts.channel(v);
    if (use_fft) {
      // Share the signal transform across bands.
      const std::size_t M = next_fast_size(T + N - 1);
      std::vector<double> buf(M, 0.0);
      std::copy(x.begin(), x.end(), buf.begin());
      const auto X = rfft(buf);
      std::vector<Complex> prod(X.size());
      std::vector<double> full(M);
      for (std::size_t l = 0; l < L; ++l) {
        std::fill(buf.begin(), buf.end(), 0.0);
        std::copy(fb.filters[l].taps.begin(), fb.filters[l].taps.end(), buf.begin());
        const auto H = rfft(buf);
        for (std::size_t k = 0; k < X.size(); ++k) prod[k] = X[k] * H[k];
        irfft(prod, full);
        auto band = dec.band(l);
        for (std::size_t t = 0; t < T; ++t) band[t * V + v] = full[t + dec.group_delay];
      }
    } else {
      for (std::size_t l = 0; l < L; ++l) {
        const auto y = convolve_same_direct(x, fb.filters[l].taps);
        auto band = dec.band(l);
        for (std::size_t t = 0; t < T; ++t) band[t * V + v] = y[t];
      }
    }
  }
  return dec;
}

TimeSeries masked_reconstruct(const BandDecomposition& dec, const BandMask& mask,
                              std::span<const double> perturbation) {
  mask.validate(dec.band_count);
  const std::size_t stride = dec.length * dec.channels;
  detail::require(perturbation.empty() || perturbation.size() == dec.band_count * stride,
                  "masked_reconstruct: perturbation must be empty or [L x T x V]");
  TimeSeries out(dec.length, dec.channels, dec.sample_rate);
  for (std::size_t l = 0; l < dec.band_count; ++l) {
    const double m = mask.values[l];
    const auto band = dec.band(l);
    if (perturbation.empty()) {
      if (m == 0.0) continue;
      for (std::size_t i = 0; i < stride; ++i) out.samples[i] += m * band[i];
    } else {
      const auto p = perturbation.subspan(l * stride, stride);
      for (std::size_t i = 0; i < stride; ++i) out.samples[i] += m * band[i] + (1.0 - m) * p[i];
    }
  }
  return out;
}

std::vector<Complex> frequency_response(std::span<const double> taps, std::span<const double> freqs_hz,
                                        double sample_rate) {
  check_rate(sample_rate);
  std::vector<Complex> out(freqs_hz.size());
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    const double w = 2.0 * kPi * freqs_hz[i] / sample_rate;
    // Unit-step rotation accumulates rounding; evaluate the phase per tap instead.
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < taps.size(); ++n) {
      const double phase = w * static_cast<double>(n);
      re += taps[n] * std::cos(phase);
      im -= taps[n] * std::sin(phase);
    }
    out[i] = {re, im};
  }
  return out;
}

std::vector<double> masked_taps(const Filterbank& fb, const BandMask& mask) {
  fb.validate();
  mask.validate(fb.band_count());
  std::vector<double> h(fb.tap_count(), 0.0);
  for (std::size_t l = 0; l < fb.band_count(); ++l) {
    const double m = mask.values[l];
    if (m == 0.0) continue;
    for (std::size_t n = 0; n < h.size(); ++n) h[n] += m * fb.filters[l].taps[n];
  }
  return h;
}

std::vector<double> collected_response_at(const Filterbank& fb, const BandMask& mask,
                                          std::span<const double> freqs_hz) {
  const auto h = masked_taps(fb, mask);
  const auto H = frequency_response(h, freqs_hz, fb.sample_rate);
  std::vector<double> mag(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) mag[i] = std::abs(H[i]);
  return mag;
}

std::vector<double> collected_response(const Filterbank& fb, const BandMask& mask, std::size_t grid_size) {
  detail::require(grid_size >= 2, "collected_response: grid size must be >= 2");
  std::vector<double> freqs(grid_size);
  const double nyquist = fb.sample_rate / 2.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    freqs[i] = nyquist * static_cast<double>(i) / static_cast<double>(grid_size - 1);
  }
  return collected_response_at(fb, mask, freqs);
}

std::vector<double> dense_magnitude_response(std::span<const double> taps, std::size_t points) {
  detail::require(points >= 2, "dense_magnitude_response: need at least 2 points");
  const std::size_t M = 2 * (points - 1);
  // Sampling the DTFT at M points equals the DFT of the taps folded modulo M.
  std::vector<double> folded(M, 0.0);
  for (std::size_t n = 0; n < taps.size(); ++n) folded[n % M] += taps[n];
  const auto H = rfft(folded);
  std::vector<double> mag(H.size());
  for (std::size_t k = 0; k < H.size(); ++k) mag[k] = std::abs(H[k]);
  return mag;
}

StopbandComparison stopband_comparison(std::size_t taps, double low_hz, double high_hz, double sample_rate) {
  check_rate(sample_rate);
  check_taps(taps);
  const double nyquist = sample_rate / 2.0;
  detail::require(low_hz > 0.0 && high_hz < nyquist && low_hz < high_hz,
                  "stopband_comparison: band must lie strictly inside (0, Nyquist)");
  const auto fir = design_bandpass(low_hz, high_hz, taps, sample_rate);
  const auto ideal = design_truncated_ideal(low_hz, high_hz, taps, sample_rate);

  std::size_t points = 2;
  while (points - 1 < 16 * taps || points < 65537) points = 2 * (points - 1) + 1;
  const double step = nyquist / static_cast<double>(points - 1);

  auto attenuation = [&](const std::vector<double>& h, double guard_hz) {
    const auto mag = dense_magnitude_response(h, points);
    double stop = 0.0, pass = 0.0, nominal = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      const double f = step * static_cast<double>(i);
      if (f <= low_hz - guard_hz || f >= high_hz + guard_hz) stop = std::max(stop, mag[i]);
      if (f >= low_hz + guard_hz && f <= high_hz - guard_hz) pass = std::max(pass, mag[i]);
      if (f >= low_hz && f <= high_hz) nominal = std::max(nominal, mag[i]);
    }
    // Bands narrower than the transition have no clean passband; fall back to the nominal band.
    const double ref = pass > 0.0 ? pass : nominal;
    if (stop <= 0.0) return 400.0;
    return 20.0 * std::log10(ref / stop);
  };

  StopbandComparison out;
  out.fir_guard_hz = 2.0 * sample_rate / static_cast<double>(taps);
  out.dft_guard_hz = 1.0 * sample_rate / static_cast<double>(taps);
  out.fir_attenuation_db = attenuation(fir.taps, out.fir_guard_hz);
  out.dft_zeroing_attenuation_db = attenuation(ideal.taps, out.dft_guard_hz);
  return out;
}

}  // namespace flextime
