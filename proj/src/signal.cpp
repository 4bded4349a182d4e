// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "flextime/error.hpp"

namespace flextime {
namespace {

// FFTW planning is not thread-safe; execution with the new-array API is.
// Plans are created once per (length, direction) and never destroyed.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan forward(std::size_t n) { return get(n, true); }
  fftw_plan backward(std::size_t n) { return get(n, false); }

 private:
  fftw_plan get(std::size_t n, bool forward) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const int size = static_cast<int>(n);
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
    // ESTIMATE keeps plan selection (and so rounding) independent of timing.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = forward ? fftw_plan_dft_r2c_1d(size, real, cplx, flags)
                             : fftw_plan_dft_c2r_1d(size, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (plan == nullptr) throw NumericError("fftw: failed to plan transform of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace

TimeSeries::TimeSeries(std::size_t length, std::size_t channels, double sample_rate)
    : samples(length * channels, 0.0), length(length), channels(channels), sample_rate(sample_rate) {}

TimeSeries::TimeSeries(std::vector<double> samples, std::size_t length, std::size_t channels,
                       double sample_rate)
    : samples(std::move(samples)), length(length), channels(channels), sample_rate(sample_rate) {
  detail::require(this->samples.size() == length * channels,
                  "TimeSeries: sample count does not match length x channels");
}

TimeSeries TimeSeries::mono(std::vector<double> samples, double sample_rate) {
  const std::size_t n = samples.size();
  return TimeSeries(std::move(samples), n, 1, sample_rate);
}

std::vector<double> TimeSeries::channel(std::size_t v) const {
  std::vector<double> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = at(t, v);
  return out;
}

void TimeSeries::set_channel(std::size_t v, std::span<const double> values) {
  detail::require(values.size() == length, "TimeSeries::set_channel: length mismatch");
  for (std::size_t t = 0; t < length; ++t) at(t, v) = values[t];
}

void TimeSeries::validate() const {
  detail::require(length >= 2, "TimeSeries: need at least 2 time steps");
  detail::require(channels >= 1, "TimeSeries: need at least 1 channel");
  detail::require(samples.size() == length * channels, "TimeSeries: storage size mismatch");
  detail::require(std::isfinite(sample_rate) && sample_rate > 0.0,
                  "TimeSeries: sample rate must be positive");
  for (double x : samples) detail::require(std::isfinite(x), "TimeSeries: non-finite sample");
}

void Spectrum::validate() const {
  detail::require(origin_length >= 2, "Spectrum: origin length must be >= 2");
  detail::require(bins == bin_count(origin_length),
                  "Spectrum: bin count inconsistent with origin length");
  detail::require(channels >= 1, "Spectrum: need at least 1 channel");
  detail::require(coefficients.size() == bins * channels, "Spectrum: storage size mismatch");
  for (const Complex& c : coefficients) {
    detail::require(std::isfinite(c.real()) && std::isfinite(c.imag()),
                    "Spectrum: non-finite coefficient");
  }
}

void FrequencyMask::validate(std::size_t expected_bins) const {
  detail::require(values.size() == expected_bins, "FrequencyMask: length does not match bin count");
  for (double m : values) {
    detail::require(std::isfinite(m) && m >= 0.0 && m <= 1.0, "FrequencyMask: values must lie in [0, 1]");
  }
}

void rfft(std::span<const double> signal, std::span<Complex> out) {
  const std::size_t n = signal.size();
  detail::require(n >= 1 && out.size() == bin_count(n), "rfft: output size must be n/2 + 1");
  fftw_execute_dft_r2c(PlanCache::instance().forward(n), const_cast<double*>(signal.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void irfft(std::span<const Complex> spectrum, std::span<double> out) {
  const std::size_t n = out.size();
  detail::require(n >= 1 && spectrum.size() == bin_count(n), "irfft: spectrum size must be n/2 + 1");
  // c2r overwrites its input.
  std::vector<Complex> scratch(spectrum.begin(), spectrum.end());
  fftw_execute_dft_c2r(PlanCache::instance().backward(n),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& x : out) x *= scale;
}

std::vector<Complex> rfft(std::span<const double> signal) {
  std::vector<Complex> out(bin_count(signal.size()));
  rfft(signal, out);
  return out;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t length) {
  std::vector<double> out(length);
  irfft(spectrum, out);
  return out;
}

Spectrum forward_dft(const TimeSeries& ts) {
  ts.validate();
  Spectrum spec;
  spec.origin_length = ts.length;
  spec.bins = bin_count(ts.length);
  spec.channels = ts.channels;
  spec.sample_rate = ts.sample_rate;
  spec.coefficients.resize(spec.bins * spec.channels);
  std::vector<Complex> column(spec.bins);
  for (std::size_t v = 0; v < ts.channels; ++v) {
    const auto x = ts.channel(v);
    rfft(x, column);
    for (std::size_t k = 0; k < spec.bins; ++k) spec.at(k, v) = column[k];
  }
  return spec;
}

TimeSeries inverse_dft(const Spectrum& spec) {
  spec.validate();
  TimeSeries ts(spec.origin_length, spec.channels, spec.sample_rate);
  std::vector<Complex> column(spec.bins);
  std::vector<double> x(spec.origin_length);
  for (std::size_t v = 0; v < spec.channels; ++v) {
    for (std::size_t k = 0; k < spec.bins; ++k) column[k] = spec.at(k, v);
    irfft(column, x);
    ts.set_channel(v, x);
  }
  return ts;
}

PerturbationSpectrum zero_perturbation(const Spectrum& spec) {
  PerturbationSpectrum p = spec;
  std::fill(p.coefficients.begin(), p.coefficients.end(), Complex{});
  return p;
}

TimeSeries dft_mask_apply(const Spectrum& spec, const FrequencyMask& mask,
                          const PerturbationSpectrum& perturbation) {
  spec.validate();
  mask.validate(spec.bins);
  detail::require(perturbation.bins == spec.bins && perturbation.channels == spec.channels &&
                      perturbation.coefficients.size() == spec.coefficients.size(),
                  "dft_mask_apply: perturbation shape does not match spectrum");
  Spectrum blended = spec;
  for (std::size_t k = 0; k < spec.bins; ++k) {
    const double m = mask.values[k];
    for (std::size_t v = 0; v < spec.channels; ++v) {
      blended.at(k, v) = m * spec.at(k, v) + (1.0 - m) * perturbation.at(k, v);
    }
  }
  return inverse_dft(blended);
}

PerturbationSpectrum moving_average_perturbation(const Spectrum& spec,
                                                 std::size_t window_half_width) {
  spec.validate();
  PerturbationSpectrum p = spec;
  const std::size_t K = spec.bins;
  std::vector<double> prefix(K + 1);
  for (std::size_t v = 0; v < spec.channels; ++v) {
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < K; ++k) prefix[k + 1] = prefix[k] + std::abs(spec.at(k, v));
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t lo = k >= window_half_width ? k - window_half_width : 0;
      const std::size_t hi = std::min(K - 1, k + window_half_width);
      const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
      const Complex c = spec.at(k, v);
      // Zero-magnitude bins have no phase; treat them as phase 0.
      const double phase = std::abs(c) > 0.0 ? std::arg(c) : 0.0;
      p.at(k, v) = std::polar(mean, phase);
    }
  }
  return p;
}

}  // namespace flextime
