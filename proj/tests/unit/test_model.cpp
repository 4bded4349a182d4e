// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "flextime/error.hpp"
#include "flextime/model.hpp"
#include "flextime/synthdata.hpp"

using namespace flextime;

namespace {

ModelSpec small_spec() { return ModelSpec::conv_pool(80, 4, 3, 3, 5); }

ModelParams random_params(const ModelSpec& spec, std::uint64_t seed) {
  auto p = init_params(spec, seed);
  std::uint64_t s = seed;
  for (auto& b : p.biases) {
    const auto noise = oracle::random_signal(b.size(), ++s, 0.1);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += noise[i];
  }
  return p;
}

double loss_at(const ModelSpec& spec, const ModelParams& p, const TimeSeries& ts, const std::vector<double>& target) {
  const auto probs = forward(spec, p, ts);
  double l = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) l -= target[c] * std::log(probs[c]);
  return l;
}

// Relative L2 error of the analytic gradient against central differences on `count` coordinates.
double input_gradient_error(const ModelSpec& spec, const ModelParams& p, const TimeSeries& ts,
                            const std::vector<double>& target, std::size_t count, std::uint64_t seed) {
  const auto g = backward_input(spec, p, ts, target);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ts.samples.size() - 1);
  const double h = 1e-4;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = pick(rng);
    TimeSeries up = ts, down = ts;
    up.samples[j] += h;
    down.samples[j] -= h;
    const double fd = (loss_at(spec, p, up, target) - loss_at(spec, p, down, target)) / (2 * h);
    num += (g[j] - fd) * (g[j] - fd);
    den += fd * fd;
  }
  return std::sqrt(num / den);
}

std::vector<double> one_hot(std::size_t n, std::size_t i) {
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return v;
}

}  // namespace

TEST_CASE("spec shapes") {
  const auto spec = ModelSpec::conv_pool();
  const auto shapes = spec.shapes();
  CHECK(shapes.front().length == 2000);
  CHECK(shapes.back().channels == 16);
  CHECK(shapes.back().length == 1);
  ModelSpec bad = spec;
  bad.input_length = 1999;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.classes = 10;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(layer_kind_from_string(to_string(LayerKind::AvgPool1d)) == LayerKind::AvgPool1d);
}

TEST_CASE("forward") {
  const auto spec = small_spec();
  const auto p = random_params(spec, 3);
  const TimeSeries ts(oracle::random_signal(80, 1), 80, 1);

  SUBCASE("a probability distribution") {
    const auto probs = forward(spec, p, ts);
    CHECK(probs.size() == 4);
    CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : probs) CHECK(v >= 0.0);
  }
  SUBCASE("zeroed final conv gives the uniform distribution") {
    auto z = p;
    std::size_t last = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      if (spec.layers[i].kind == LayerKind::Conv1d) last = i;
    }
    std::fill(z.weights[last].begin(), z.weights[last].end(), 0.0);
    std::fill(z.biases[last].begin(), z.biases[last].end(), 0.0);
    for (double v : forward(spec, z, ts)) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("bitwise deterministic") {
    const auto a = forward(spec, init_params(spec, 9), ts);
    const auto b = forward(spec, init_params(spec, 9), ts);
    CHECK(a == b);
    CHECK(forward(spec, init_params(spec, 10), ts) != a);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(forward(spec, p, TimeSeries(oracle::random_signal(79, 1), 79, 1)), ValidationError);
    CHECK_THROWS_AS(forward(spec, init_params(ModelSpec::conv_pool(80, 4, 2, 3, 5), 1), ts), ValidationError);
  }
  SUBCASE("softmax is stable for large logits") {
    const std::vector<double> z = {1000.0, 999.0, -1000.0};
    const auto s = softmax(z);
    CHECK(s[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(s[2] == 0.0);
  }
}

TEST_CASE("backward_input") {
  SUBCASE("finite differences on the pooled CNN") {
    const auto spec = small_spec();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto p = random_params(spec, seed);
      const TimeSeries ts(oracle::random_signal(80, seed + 10), 80, 1);
      CHECK(input_gradient_error(spec, p, ts, one_hot(4, seed % 4), 20, seed) <= 1e-3);
    }
  }
  SUBCASE("finite differences on a multichannel input") {
    ModelSpec spec = ModelSpec::conv_pool(40, 4, 2, 2, 3);
    spec.input_channels = 3;
    const auto p = random_params(spec, 5);
    const TimeSeries ts(oracle::random_signal(120, 6), 40, 3);
    CHECK(input_gradient_error(spec, p, ts, {0.1, 0.2, 0.3, 0.4}, 20, 7) <= 1e-3);
  }
  SUBCASE("each layer type in isolation") {
    std::vector<ModelSpec> specs(4);
    specs[0] = {{LayerSpec::conv(5, 3, 1)}, 3, 2, 3};  // 3 x 3 -> 3 x 1
    specs[1] = {{LayerSpec::relu()}, 1, 3, 3};
    specs[2] = {{LayerSpec::maxpool(4, 4)}, 4, 3, 3};
    specs[3] = {{LayerSpec::avgpool(4, 4)}, 4, 3, 3};
    for (const auto& spec : specs) {
      spec.validate();
      const auto p = random_params(spec, 11);
      // Positive inputs keep the ReLU away from its kink.
      auto x = oracle::random_signal(spec.input_length * spec.input_channels, 12);
      for (double& v : x) v = 0.1 + std::abs(v);
      const TimeSeries ts(x, spec.input_length, spec.input_channels);
      CHECK(input_gradient_error(spec, p, ts, {0.2, 0.5, 0.3}, 9, 13) <= 1e-3);
    }
  }
  SUBCASE("uniform target at uniform prediction has zero gradient") {
    const auto spec = small_spec();
    auto p = init_params(spec, 4);
    const TimeSeries zero(std::vector<double>(80, 0.0), 80, 1);
    const auto g = backward_input(spec, p, zero, std::vector<double>(4, 0.25));
    for (double v : g) CHECK(std::abs(v) <= 1e-15);
  }
  SUBCASE("scaling the target scales the gradient") {
    const auto spec = small_spec();
    const auto p = random_params(spec, 6);
    const TimeSeries ts(oracle::random_signal(80, 2), 80, 1);
    const auto g1 = backward_input(spec, p, ts, one_hot(4, 1));
    const auto g3 = backward_input(spec, p, ts, std::vector<double>{0, 3, 0, 0});
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == doctest::Approx(3 * g1[i]).epsilon(1e-10));
  }
  SUBCASE("classifier interface agrees with the free functions") {
    const auto spec = small_spec();
    const CnnClassifier clf(spec, random_params(spec, 8));
    const TimeSeries ts(oracle::random_signal(80, 3), 80, 1);
    const auto t = one_hot(4, 2);
    const auto lg = clf.loss_and_input_gradient(ts, t);
    CHECK(lg.input_gradient == backward_input(spec, clf.params(), ts, t));
    CHECK(lg.loss == doctest::Approx(loss_at(spec, clf.params(), ts, t)).epsilon(1e-12));
    CHECK(clf.predict(ts) == forward(spec, clf.params(), ts));
  }
}

TEST_CASE("parameter gradient matches finite differences") {
  const auto spec = small_spec();
  const auto p = random_params(spec, 21);
  const TimeSeries ts(oracle::random_signal(80, 22), 80, 1);
  const auto target = one_hot(4, 3);
  const auto lg = loss_gradient(spec, p, ts, target, false, true);
  const double h = 1e-4;
  for (std::size_t layer = 0; layer < spec.layers.size(); ++layer) {
    if (spec.layers[layer].kind != LayerKind::Conv1d) continue;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p.weights[layer].size(); i += 1 + p.weights[layer].size() / 10) {
      auto up = p, down = p;
      up.weights[layer][i] += h;
      down.weights[layer][i] -= h;
      const double fd = (loss_at(spec, up, ts, target) - loss_at(spec, down, ts, target)) / (2 * h);
      num += std::pow(lg.param_gradient.weights[layer][i] - fd, 2);
      den += fd * fd;
    }
    for (std::size_t i = 0; i < p.biases[layer].size(); ++i) {
      auto up = p, down = p;
      up.biases[layer][i] += h;
      down.biases[layer][i] -= h;
      const double fd = (loss_at(spec, up, ts, target) - loss_at(spec, down, ts, target)) / (2 * h);
      num += std::pow(lg.param_gradient.biases[layer][i] - fd, 2);
      den += fd * fd;
    }
    CHECK(std::sqrt(num / den) <= 1e-3);
  }
}

TEST_CASE("convolution is translation equivariant") {
  // Global max pooling over a same-padded conv output ignores interior shifts.
  const std::size_t T = 64;
  const ModelSpec spec{{LayerSpec::conv(5, 3, 2), LayerSpec::maxpool(T, T)}, T, 1, 3};
  const auto p = random_params(spec, 31);
  std::vector<double> x(T, 0.0), shifted(T, 0.0);
  const auto bump = oracle::random_signal(12, 32);
  for (std::size_t i = 0; i < bump.size(); ++i) {
    x[20 + i] = bump[i];
    shifted[22 + i] = bump[i];
  }
  const auto a = logits(spec, p, TimeSeries::mono(x)), b = logits(spec, p, TimeSeries::mono(shifted));
  for (std::size_t c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
}

TEST_CASE("predict_batch") {
  const auto spec = small_spec();
  const auto p = random_params(spec, 41);
  std::vector<TimeSeries> batch;
  for (std::uint64_t i = 0; i < 9; ++i) batch.emplace_back(oracle::random_signal(80, 100 + i), 80, 1);
  for (std::size_t workers : {1u, 3u}) {
    const auto out = predict_batch(spec, p, batch, workers);
    REQUIRE(out.distributions.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(oracle::max_abs_diff(out.distributions[i], forward(spec, p, batch[i])) <= 1e-9);
      CHECK(out.labels[i] == static_cast<int>(argmax(out.distributions[i])));
    }
  }
  std::vector<TimeSeries> reversed(batch.rbegin(), batch.rend());
  const auto fwd = predict_batch(spec, p, batch), rev = predict_batch(spec, p, reversed);
  for (std::size_t i = 0; i < 9; ++i) CHECK(fwd.distributions[i] == rev.distributions[8 - i]);
  const auto one = predict_batch(spec, p, std::span<const TimeSeries>(batch.data(), 1));
  CHECK(one.distributions[0] == forward(spec, p, batch[0]));
}

TEST_CASE("gradients are bitwise identical on every thread") {
  const auto spec = ModelSpec::conv_pool(256, 16, 4, 4, 15);
  const auto p = random_params(spec, 3);
  std::vector<double> target(16, 0.0);
  target[3] = 1.0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const TimeSeries ts(oracle::random_signal(256, seed), 256, 1);
    const auto here = loss_gradient(spec, p, ts, target, true, true);
    LossGradient there;
    std::thread worker([&] {
      // Shift heap addresses so buffers land at a different alignment.
      std::vector<char> pad(8 * seed);
      there = loss_gradient(spec, p, ts, target, true, true);
    });
    worker.join();
    CHECK(there.loss == here.loss);
    CHECK(there.input_gradient == here.input_gradient);
    CHECK(there.param_gradient.weights == here.param_gradient.weights);
    CHECK(there.param_gradient.biases == here.param_gradient.biases);
  }
}

TEST_CASE("training") {
  SUBCASE("tone vs noise is learned within 20 epochs") {
    const std::size_t T = 64;
    const auto spec = ModelSpec::conv_pool(T, 2, 4, 4, 7);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::uniform_real_distribution<double> phase(0.0, 2 * oracle::kPi);
    auto make = [&](std::size_t n, std::vector<TimeSeries>& xs, std::vector<int>& ys) {
      for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % 2);
        const double ph = phase(rng);
        std::vector<double> x(T);
        for (std::size_t t = 0; t < T; ++t) x[t] = noise(rng) + (y ? std::sin(2 * oracle::kPi * 0.125 * t + ph) : 0.0);
        xs.push_back(TimeSeries::mono(x));
        ys.push_back(y);
      }
    };
    std::vector<TimeSeries> tx, vx;
    std::vector<int> ty, vy;
    make(256, tx, ty);
    make(64, vx, vy);
    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 16;
    cfg.seed = 1;
    const auto r = train(spec, tx, ty, vx, vy, cfg);
    CHECK(r.best_val_accuracy == 1.0);
    CHECK(accuracy(spec, r.params, vx, vy) == 1.0);
    // Early stopping keeps the best checkpoint.
    CHECK(accuracy(spec, r.params, vx, vy) >= accuracy(spec, r.final_params, vx, vy));
    CHECK(r.log[r.best_epoch - 1].best);

    SUBCASE("training is deterministic") {
      const auto again = train(spec, tx, ty, vx, vy, cfg);
      CHECK(again.params.weights == r.params.weights);
    }
    SUBCASE("training does not depend on the worker count") {
      cfg.workers = 3;
      const auto parallel = train(spec, tx, ty, vx, vy, cfg);
      CHECK(parallel.params.weights == r.params.weights);
      CHECK(parallel.params.biases == r.params.biases);
    }
  }
  SUBCASE("an untrained network is at chance on the balanced synthetic test split") {
    SynthConfig cfg;
    cfg.seed = 3;
    const auto test = generate_balanced(cfg, kTestSplit, 480);
    const auto spec = ModelSpec::conv_pool(2000, 16, 8, 8, 31);
    const double acc = accuracy(spec, init_params(spec, 7), test.inputs(), test.labels());
    CHECK(acc >= 0.02);
    CHECK(acc <= 0.12);
  }
  SUBCASE("invalid configuration") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    const auto spec = small_spec();
    std::vector<TimeSeries> xs{TimeSeries(oracle::random_signal(80, 1), 80, 1)};
    std::vector<int> bad{7};
    CHECK_THROWS_AS(train(spec, xs, bad, xs, bad, TrainConfig{}), ValidationError);
  }
}
