// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include "flextime/error.hpp"
#include "flextime/synthdata.hpp"

using namespace flextime;

namespace {

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("voigt_amplitude") {
  SUBCASE("pure Gaussian limit") {
    for (double s : {0.5, 1.0, 3.0}) CHECK(voigt_amplitude(0.0, s, 0.0) == doctest::Approx(1 / (s * std::sqrt(2 * oracle::kPi))).epsilon(1e-6));
  }
  SUBCASE("pure Lorentzian limit") {
    CHECK(voigt_amplitude(2.0, 0.0, 1.0) == doctest::Approx(1.0 / (oracle::kPi * 5.0)).epsilon(1e-9));
  }
  SUBCASE("symmetric about the peak") {
    for (double d : {0.1, 1.0, 7.5}) CHECK(std::abs(voigt_amplitude(10 + d, 10.0, 1.3, 0.7) - voigt_amplitude(10 - d, 10.0, 1.3, 0.7)) <= 1e-9);
  }
  SUBCASE("matches numeric convolution") {
    CHECK(std::abs(voigt_amplitude(0.0, 1.0, 1.0) - oracle::voigt_quadrature(0.0, 1.0, 1.0)) <= 1e-5);
    for (double x : {0.5, 2.0, 6.0}) {
      for (auto [s, g] : {std::pair{1.0, 1.0}, {3.9, 3.9}, {0.3, 2.0}, {2.0, 0.1}}) {
        CHECK(std::abs(voigt_amplitude(x, s, g) - oracle::voigt_quadrature(x, s, g)) <= 1e-5);
      }
    }
  }
  SUBCASE("both widths zero") { CHECK_THROWS_AS(voigt_amplitude(0.0, 0.0, 0.0), ValidationError); }
}

TEST_CASE("labels and ground truth") {
  SynthConfig cfg;
  CHECK(label_for_bins(cfg, {4, 7, 18}) == 5);
  CHECK(label_for_bins(cfg, {0, 1, 2, 31}) == 0);
  CHECK(label_for_bins(cfg, {4, 11, 18, 26}) == 15);
  CHECK(label_for_bins(cfg, {26}) == 8);

  const auto gt = ground_truth_frequencies(cfg, {4, 7, 18});
  REQUIRE(gt.size() == 1001);
  const double w = 1000.0 / 32;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const bool in4 = k >= 4 * w && k < 5 * w, in18 = k >= 18 * w && k < 19 * w;
    CHECK(gt[k] == (in4 || in18));
  }
}

TEST_CASE("generate_sample") {
  SynthConfig cfg;
  cfg.seed = 4;

  SUBCASE("sample invariants") {
    for (std::uint64_t i = 0; i < 50; ++i) {
      auto rng = sample_stream(cfg.seed, kTrainSplit, i);
      const auto s = generate_sample(cfg, rng);
      CHECK(s.ts.length == 2000);
      CHECK(s.sampled_bins.size() >= 1);
      CHECK(s.sampled_bins.size() <= 10);
      CHECK(std::is_sorted(s.sampled_bins.begin(), s.sampled_bins.end()));
      CHECK(std::adjacent_find(s.sampled_bins.begin(), s.sampled_bins.end()) == s.sampled_bins.end());
      CHECK(s.label == label_for_bins(cfg, s.sampled_bins));
      CHECK(s.ground_truth_freq == ground_truth_frequencies(cfg, s.sampled_bins));
      for (std::size_t b = 0; b < 32; ++b) {
        const bool sampled = std::binary_search(s.sampled_bins.begin(), s.sampled_bins.end(), b);
        const bool salient = std::find(cfg.salient_bins.begin(), cfg.salient_bins.end(), b) != cfg.salient_bins.end();
        CHECK(s.ground_truth_bins[b] == (sampled && salient));
      }
    }
  }

  SUBCASE("waveform matches the generation equation") {
    SynthConfig c = cfg;
    c.noise_std = 0.0;
    std::mt19937_64 rng(77);
    std::mt19937_64 replay = rng;
    const auto s = synthesize(c, {3, 18}, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> expected(2000, 0.0);
    const double w = c.bin_width();
    for (std::size_t b : {3u, 18u}) {
      const double start = b * w, peak = start + w * unit(replay), phase = 2 * oracle::kPi * unit(replay);
      std::vector<double> xb(2000, 0.0);
      for (int f = 0; f < 20; ++f) {
        const double freq = start + w * f / 20.0;
        const double a = oracle::voigt_quadrature(freq - peak, c.sigma(), c.gamma());
        for (int t = 0; t < 2000; ++t) xb[t] += a * std::sin(2 * oracle::kPi * freq * t / 2000.0 + phase);
      }
      double m = 0;
      for (double v : xb) m = std::max(m, std::abs(v));
      for (int t = 0; t < 2000; ++t) expected[t] += xb[t] / m;
    }
    CHECK(oracle::max_abs_diff(s.ts.samples, expected) <= 1e-5);
  }

  SUBCASE("a noiseless single-bin sample keeps its energy in the bin") {
    SynthConfig c = cfg;
    c.noise_std = 0.0;
    for (std::size_t b : {0u, 4u, 17u, 31u}) {
      std::mt19937_64 rng(b);
      const auto s = synthesize(c, {b}, rng);
      const auto spec = oracle::dft(s.ts.samples);
      double total = 0, inside = 0;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        const double e = std::norm(spec[k]);
        total += e;
        if (k >= b * c.bin_width() && k < (b + 1) * c.bin_width()) inside += e;
      }
      CHECK(inside / total >= 0.9);
    }
  }

  SUBCASE("labels do not depend on phases, amplitudes or noise") {
    SynthConfig noisy = cfg;
    noisy.noise_std = 0.5;
    noisy.voigt_sigma = 2.0;
    auto r1 = sample_stream(1, 0, 0), r2 = sample_stream(1, 0, 0);
    const auto a = generate_sample(cfg, r1), b = generate_sample(noisy, r2);
    CHECK(a.sampled_bins == b.sampled_bins);
    CHECK(a.label == b.label);
  }
}

TEST_CASE("datasets") {
  SUBCASE("balanced test split") {
    SynthConfig cfg;
    cfg.seed = 2;
    const auto test = generate_balanced(cfg, kTestSplit, 992);
    const auto counts = test.class_counts(16);
    for (std::size_t c = 0; c < 16; ++c) CHECK(counts[c] == 62);
    // Order is shuffled: the rarest class is not pushed to the end.
    std::vector<std::size_t> prefix(16, 0);
    for (std::size_t i = 0; i < 200; ++i) ++prefix[static_cast<std::size_t>(test.samples[i].label)];
    for (std::size_t c = 0; c < 16; ++c) CHECK(prefix[c] >= 3);
  }
  SUBCASE("determinism across runs and worker counts") {
    SynthConfig cfg;
    cfg.seed = 5;
    cfg.length = 256;
    const auto a = generate_dataset(cfg, 40, 10, 32, 1);
    const auto b = generate_dataset(cfg, 40, 10, 32, 3);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a.train.samples[i].ts.samples == b.train.samples[i].ts.samples);
    for (std::size_t i = 0; i < 32; ++i) CHECK(a.test.samples[i].ts.samples == b.test.samples[i].ts.samples);
    cfg.seed = 6;
    const auto c = generate_dataset(cfg, 40, 10, 32, 1);
    CHECK(c.train.samples[0].ts.samples != a.train.samples[0].ts.samples);
  }
  SUBCASE("empty-subset class frequency matches the sampling process") {
    // P(no salient bin) = E_B[C(28, B) / C(32, B)], B uniform on 1..10.
    double p0 = 0;
    for (int B = 1; B <= 10; ++B) p0 += binomial(28, B) / binomial(32, B) / 10.0;
    SynthConfig cfg;
    cfg.seed = 8;
    cfg.length = 256;
    const std::size_t n = 10000;
    const auto split = generate_iid(cfg, kTrainSplit, n);
    const double freq = static_cast<double>(split.class_counts(16)[0]) / n;
    CHECK(std::abs(freq - p0) <= 3 * std::sqrt(p0 * (1 - p0) / n));
  }
  SUBCASE("unreachable class aborts") {
    SynthConfig cfg;
    cfg.length = 256;
    cfg.bins_max = 1;  // at most one salient bin per sample
    CHECK_THROWS_AS(generate_balanced(cfg, kTestSplit, 16, 1, 50), NumericError);
  }
  SUBCASE("invalid configuration") {
    SynthConfig cfg;
    cfg.salient_bins = {4, 4, 18, 26};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SynthConfig{};
    cfg.salient_bins = {4, 11, 18, 32};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SynthConfig{};
    cfg.bins_max = 33;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
}
