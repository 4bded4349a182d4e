// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flextime/error.hpp"
#include "flextime/parallel.hpp"

namespace flextime {
namespace {

constexpr double kPi = std::numbers::pi;

// Weideman's rational expansion of the Faddeeva function; 40 terms give
// ~1e-15 relative accuracy in the upper half plane.
constexpr std::size_t kFaddeevaTerms = 40;

struct FaddeevaTable {
  std::array<double, kFaddeevaTerms> coeff{};
  double scale = 0.0;

  FaddeevaTable() {
    const std::size_t n = kFaddeevaTerms;
    const std::size_t m = 2 * n;
    const std::size_t m2 = 2 * m;
    scale = std::sqrt(static_cast<double>(n) / std::sqrt(2.0));
    // f sampled on t = L tan(theta / 2), theta = k pi / M for k = -M+1 .. M-1, with f[0] = 0.
    std::vector<double> f(m2, 0.0);
    for (std::size_t j = 1; j < m2; ++j) {
      const double k = static_cast<double>(j) - static_cast<double>(m);
      const double t = scale * std::tan(k * kPi / static_cast<double>(m) / 2.0);
      f[j] = std::exp(-t * t) * (scale * scale + t * t);
    }
    // Real part of the DFT of the half-swapped samples, coefficients 1..N.
    for (std::size_t c = 1; c <= n; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m2; ++j) {
        const double v = f[(j + m) % m2];
        acc += v * std::cos(2.0 * kPi * static_cast<double>(j * c % m2) / static_cast<double>(m2));
      }
      coeff[c - 1] = acc / static_cast<double>(m2);
    }
  }
};

const FaddeevaTable& faddeeva_table() {
  static const FaddeevaTable table;
  return table;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Complex faddeeva(Complex z) {
  detail::require(z.imag() >= 0.0, "faddeeva: defined here for Im z >= 0 only");
  const auto& tab = faddeeva_table();
  const Complex i{0.0, 1.0};
  const Complex denom = tab.scale - i * z;
  const Complex big_z = (tab.scale + i * z) / denom;
  Complex p = 0.0;
  for (std::size_t c = kFaddeevaTerms; c-- > 0;) p = p * big_z + tab.coeff[c];
  return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(kPi)) / denom;
}

double voigt_amplitude(double x, double sigma, double gamma) {
  detail::require(sigma >= 0.0 && gamma >= 0.0 && std::isfinite(sigma) && std::isfinite(gamma),
                  "voigt: widths must be finite and non-negative");
  detail::require(sigma > 0.0 || gamma > 0.0, "voigt: sigma and gamma cannot both be zero");
  if (sigma == 0.0) return gamma / (kPi * (x * x + gamma * gamma));
  if (gamma == 0.0) return std::exp(-x * x / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
  const Complex z{x / (sigma * std::sqrt(2.0)), gamma / (sigma * std::sqrt(2.0))};
  return faddeeva(z).real() / (sigma * std::sqrt(2.0 * kPi));
}

void SynthConfig::validate() const {
  detail::require(length >= 4, "SynthConfig: length must be >= 4");
  detail::require(sample_rate > 0.0 && std::isfinite(sample_rate), "SynthConfig: sample_rate must be positive");
  detail::require(bin_count >= 1, "SynthConfig: bin_count must be >= 1");
  detail::require(bin_width() >= 1.0, "SynthConfig: bins narrower than one DFT bin");
  detail::require(tones_per_bin >= 1, "SynthConfig: tones_per_bin must be >= 1");
  detail::require(bins_min >= 1 && bins_min <= bins_max && bins_max <= bin_count,
                  "SynthConfig: need 1 <= bins_min <= bins_max <= bin_count");
  detail::require(noise_std >= 0.0 && std::isfinite(noise_std), "SynthConfig: noise_std must be >= 0");
  detail::require(sigma() >= 0.0 && gamma() >= 0.0 && (sigma() > 0.0 || gamma() > 0.0),
                  "SynthConfig: Voigt widths must be non-negative and not both zero");
  for (std::size_t i = 0; i < salient_bins.size(); ++i) {
    detail::require(salient_bins[i] < bin_count, "SynthConfig: salient bin out of range");
    for (std::size_t j = 0; j < i; ++j) {
      detail::require(salient_bins[i] != salient_bins[j], "SynthConfig: salient bins must be distinct");
    }
  }
}

int label_for_bins(const SynthConfig& cfg, const std::vector<std::size_t>& sampled_bins) {
  int label = 0;
  for (std::size_t i = 0; i < cfg.salient_bins.size(); ++i) {
    if (std::find(sampled_bins.begin(), sampled_bins.end(), cfg.salient_bins[i]) != sampled_bins.end()) {
      label |= 1 << i;
    }
  }
  return label;
}

std::vector<bool> ground_truth_frequencies(const SynthConfig& cfg, const std::vector<std::size_t>& bins) {
  const std::size_t K = bin_count(cfg.length);
  std::vector<bool> gt(K, false);
  const double w = cfg.bin_width();
  for (std::size_t b : bins) {
    if (std::find(cfg.salient_bins.begin(), cfg.salient_bins.end(), b) == cfg.salient_bins.end()) continue;
    const double start = static_cast<double>(b) * w;
    const double end = static_cast<double>(b + 1) * w;
    for (std::size_t j = 0; j < K; ++j) {
      const double f = static_cast<double>(j);
      if (f >= start && f < end) gt[j] = true;
    }
  }
  return gt;
}

std::vector<std::size_t> sample_bins(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count_dist(cfg.bins_min, cfg.bins_max);
  const std::size_t count = count_dist(rng);
  std::vector<std::size_t> pool(cfg.bin_count);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  // Partial Fisher-Yates: the first `count` entries are a uniform draw without replacement.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<std::size_t> bins(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(bins.begin(), bins.end());
  return bins;
}

SynthSample synthesize(const SynthConfig& cfg, std::vector<std::size_t> bins, std::mt19937_64& rng) {
  const std::size_t T = cfg.length;
  const double w = cfg.bin_width();
  const double sigma = cfg.sigma();
  const double gamma = cfg.gamma();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(T, 0.0), xb(T);
  for (std::size_t b : bins) {
    const double start = static_cast<double>(b) * w;
    const double peak = start + w * unit(rng);
    const double phase = 2.0 * kPi * unit(rng);
    std::fill(xb.begin(), xb.end(), 0.0);
    for (std::size_t i = 0; i < cfg.tones_per_bin; ++i) {
      const double f = start + w * static_cast<double>(i) / static_cast<double>(cfg.tones_per_bin);
      const double amp = voigt_amplitude(f, peak, sigma, gamma);
      // Rotate a phasor instead of calling sin per sample; drift stays ~T * eps.
      const double omega = 2.0 * kPi * f / static_cast<double>(T);
      const Complex step = std::polar(1.0, omega);
      Complex z = std::polar(1.0, phase);
      for (std::size_t t = 0; t < T; ++t) {
        xb[t] += amp * z.imag();
        z *= step;
        if ((t & 255) == 255) z /= std::abs(z);
      }
    }
    double peak_abs = 0.0;
    for (double v : xb) peak_abs = std::max(peak_abs, std::abs(v));
    const double norm = peak_abs > 0.0 ? 1.0 / peak_abs : 0.0;
    for (std::size_t t = 0; t < T; ++t) x[t] += xb[t] * norm;
  }
  if (cfg.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_std);
    for (double& v : x) v += noise(rng);
  }
  SynthSample s;
  s.ts = TimeSeries::mono(std::move(x), cfg.sample_rate);
  s.label = label_for_bins(cfg, bins);
  s.ground_truth_bins.assign(cfg.bin_count, false);
  for (std::size_t b : bins) {
    if (std::find(cfg.salient_bins.begin(), cfg.salient_bins.end(), b) != cfg.salient_bins.end()) {
      s.ground_truth_bins[b] = true;
    }
  }
  s.ground_truth_freq = ground_truth_frequencies(cfg, bins);
  s.sampled_bins = std::move(bins);
  return s;
}

SynthSample generate_sample(const SynthConfig& cfg, std::mt19937_64& rng) {
  auto bins = sample_bins(cfg, rng);
  return synthesize(cfg, std::move(bins), rng);
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t split, std::uint64_t index) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ split) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

std::vector<TimeSeries> SynthSplit::inputs() const {
  std::vector<TimeSeries> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.ts);
  return out;
}

std::vector<int> SynthSplit::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::size_t> SynthSplit::class_counts(std::size_t classes) const {
  std::vector<std::size_t> counts(classes, 0);
  for (const auto& s : samples) counts.at(static_cast<std::size_t>(s.label))++;
  return counts;
}

SynthSplit generate_iid(const SynthConfig& cfg, std::uint64_t split, std::size_t n, std::size_t workers) {
  cfg.validate();
  SynthSplit out;
  out.samples.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = sample_stream(cfg.seed, split, i);
    out.samples[i] = generate_sample(cfg, rng);
  });
  return out;
}

SynthSplit generate_balanced(const SynthConfig& cfg, std::uint64_t split, std::size_t n, std::size_t workers,
                             std::size_t attempt_budget) {
  cfg.validate();
  const std::size_t classes = cfg.class_count();
  detail::require(n % classes == 0,
                  "generate_balanced: test size " + std::to_string(n) + " is not divisible by " +
                      std::to_string(classes) + " classes");
  const std::size_t quota = n / classes;
  std::vector<std::size_t> filled(classes, 0);
  std::vector<std::uint64_t> accepted;
  accepted.reserve(n);
  const std::size_t max_attempts = std::max<std::size_t>(1, n) * attempt_budget;
  // Label draws are cheap; waveforms are synthesized only for accepted attempts.
  for (std::uint64_t attempt = 0; accepted.size() < n; ++attempt) {
    if (attempt >= max_attempts) {
      std::string missing;
      for (std::size_t c = 0; c < classes; ++c) {
        if (filled[c] < quota) missing += " " + std::to_string(c) + "(" + std::to_string(filled[c]) + "/" + std::to_string(quota) + ")";
      }
      throw NumericError("generate_balanced: could not fill classes within " + std::to_string(max_attempts) +
                         " draws; short:" + missing);
    }
    auto rng = sample_stream(cfg.seed, split, attempt);
    const int label = label_for_bins(cfg, sample_bins(cfg, rng));
    if (filled[static_cast<std::size_t>(label)] < quota) {
      ++filled[static_cast<std::size_t>(label)];
      accepted.push_back(attempt);
    }
  }
  // Acceptance order front-loads common classes; shuffle so every prefix is roughly balanced.
  auto order = sample_stream(cfg.seed, split, ~std::uint64_t{0});
  std::shuffle(accepted.begin(), accepted.end(), order);
  SynthSplit out;
  out.samples.resize(n);
  parallel_for(n, workers, [&](std::size_t i) {
    auto rng = sample_stream(cfg.seed, split, accepted[i]);
    auto bins = sample_bins(cfg, rng);
    out.samples[i] = synthesize(cfg, std::move(bins), rng);
  });
  return out;
}

SynthDataset generate_dataset(const SynthConfig& cfg, std::size_t n_train, std::size_t n_val,
                              std::size_t n_test_balanced, std::size_t workers, std::size_t attempt_budget) {
  SynthDataset ds;
  ds.train = generate_iid(cfg, kTrainSplit, n_train, workers);
  ds.val = generate_iid(cfg, kValSplit, n_val, workers);
  ds.test = generate_balanced(cfg, kTestSplit, n_test_balanced, workers, attempt_budget);
  return ds;
}

}  // namespace flextime
