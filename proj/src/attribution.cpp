// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "flextime/error.hpp"
#include "flextime/explain.hpp"
#include "flextime/parallel.hpp"

namespace flextime {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Coarse Bernoulli grid for mask `index`, linearly upsampled to K bins.
// Each mask draws from its own stream, so results do not depend on evaluation order.
void rise_mask(const FreqRiseConfig& cfg, std::size_t index, std::size_t K, std::vector<double>& coarse,
               std::vector<double>& out) {
  std::uint64_t state = splitmix64(cfg.seed ^ splitmix64(index + 0x52495345ULL));
  coarse.resize(cfg.grid_size);
  for (double& c : coarse) {
    state = splitmix64(state);
    const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
    c = u < cfg.keep_probability ? 1.0 : 0.0;
  }
  out.resize(K);
  const double scale = K > 1 ? static_cast<double>(cfg.grid_size - 1) / static_cast<double>(K - 1) : 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double u = static_cast<double>(k) * scale;
    const auto i0 = std::min(static_cast<std::size_t>(u), cfg.grid_size - 2);
    const double f = u - static_cast<double>(i0);
    out[k] = coarse[i0] * (1.0 - f) + coarse[i0 + 1] * f;
  }
}

std::size_t pick_target(const Classifier& model, const TimeSeries& ts, std::optional<std::size_t> target_class) {
  if (target_class) {
    detail::require(*target_class < model.num_classes(), "explain: target class out of range");
    return *target_class;
  }
  return argmax(model.predict(ts));
}

}  // namespace

std::string to_string(GradientMethod method) {
  switch (method) {
    case GradientMethod::Saliency:
      return "saliency";
    case GradientMethod::GradientXInput:
      return "gxi";
    case GradientMethod::IntegratedGradients:
      return "ig";
  }
  return "unknown";
}

GradientMethod gradient_method_from_string(const std::string& name) {
  if (name == "saliency") return GradientMethod::Saliency;
  if (name == "gxi") return GradientMethod::GradientXInput;
  if (name == "ig") return GradientMethod::IntegratedGradients;
  detail::fail("unknown gradient method '" + name + "' (expected saliency, gxi or ig)");
}

Explanation freqrise_explain(const Classifier& model, const TimeSeries& ts, std::optional<std::size_t> target_class,
                             const FreqRiseConfig& cfg) {
  cfg.validate();
  ts.validate();
  const std::size_t target = pick_target(model, ts, target_class);
  const Spectrum spec = forward_dft(ts);
  const PerturbationSpectrum zero = zero_perturbation(spec);
  const std::size_t K = spec.bins;

  std::vector<double> scores(cfg.n_masks);
  parallel_for(cfg.n_masks, cfg.workers, [&](std::size_t i) {
    std::vector<double> coarse;
    FrequencyMask mask;
    rise_mask(cfg, i, K, coarse, mask.values);
    scores[i] = model.predict(dft_mask_apply(spec, mask, zero))[target];
  });

  Explanation ex;
  ex.method = "freqrise";
  ex.target_class = target;
  ex.channels = ts.channels;
  ex.saliency.assign(K, 0.0);
  std::vector<double> coarse, mask;
  for (std::size_t i = 0; i < cfg.n_masks; ++i) {
    rise_mask(cfg, i, K, coarse, mask);
    for (std::size_t k = 0; k < K; ++k) ex.saliency[k] += scores[i] * mask[k];
  }
  const double norm = 1.0 / (static_cast<double>(cfg.n_masks) * cfg.keep_probability);
  for (double& s : ex.saliency) s *= norm;
  return ex;
}

std::vector<double> probability_input_gradient(const Classifier& model, const TimeSeries& ts, std::size_t target_class,
                                               double* probability) {
  if (!model.has_input_gradient()) throw UnsupportedError("gradient attribution needs a model with input gradients");
  std::vector<double> onehot(model.num_classes(), 0.0);
  detail::require(target_class < onehot.size(), "probability_input_gradient: target class out of range");
  onehot[target_class] = 1.0;
  LossGradient lg = model.loss_and_input_gradient(ts, onehot);
  // loss = -log p_l, so dp_l/dx = -p_l * dloss/dx.
  const double p = lg.probabilities[target_class];
  for (double& g : lg.input_gradient) g *= -p;
  if (probability) *probability = p;
  return std::move(lg.input_gradient);
}

Explanation gradient_explain(GradientMethod method, const Classifier& model, const TimeSeries& ts,
                             std::optional<std::size_t> target_class, std::size_t ig_steps) {
  ts.validate();
  if (!model.has_input_gradient()) {
    throw UnsupportedError(to_string(method) + " attribution needs a model with input gradients");
  }
  detail::require(method != GradientMethod::IntegratedGradients || ig_steps >= 1, "gradient_explain: ig_steps must be >= 1");
  const std::size_t target = pick_target(model, ts, target_class);
  const Spectrum spec = forward_dft(ts);
  const std::size_t K = spec.bins;
  const std::size_t V = spec.channels;

  std::vector<Complex> grad;
  if (method == GradientMethod::IntegratedGradients) {
    // Straight-line path from the zero spectrum; x is linear in c, so scaling x scales c.
    grad.assign(K * V, Complex{});
    TimeSeries scaled = ts;
    for (std::size_t s = 0; s < ig_steps; ++s) {
      const double alpha = (static_cast<double>(s) + 0.5) / static_cast<double>(ig_steps);
      for (std::size_t i = 0; i < ts.samples.size(); ++i) scaled.samples[i] = alpha * ts.samples[i];
      const auto g = spectral_gradient(probability_input_gradient(model, scaled, target), ts.length, V);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
    for (Complex& g : grad) g /= static_cast<double>(ig_steps);
  } else {
    grad = spectral_gradient(probability_input_gradient(model, ts, target), ts.length, V);
  }

  Explanation ex;
  ex.method = to_string(method);
  ex.target_class = target;
  ex.channels = V;
  ex.channel_saliency.resize(K * V);
  if (method != GradientMethod::Saliency) ex.attribution.assign(K, 0.0);
  for (std::size_t i = 0; i < K * V; ++i) {
    if (method == GradientMethod::Saliency) {
      ex.channel_saliency[i] = std::abs(grad[i]);
    } else {
      // Real inner product of the gradient with the coefficient: first-order change in y.
      const double a = std::real(std::conj(grad[i]) * spec.coefficients[i]);
      ex.attribution[i / V] += a;
      ex.channel_saliency[i] = std::abs(a);
    }
  }
  ex.saliency.assign(K, 0.0);
  for (std::size_t i = 0; i < K * V; ++i) ex.saliency[i / V] += ex.channel_saliency[i];
  if (V == 1) ex.channel_saliency.clear();
  return ex;
}

}  // namespace flextime
