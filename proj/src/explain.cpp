// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/explain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "flextime/error.hpp"

namespace flextime {
namespace {

constexpr double kProbabilityFloor = 1e-12;
constexpr double kFiniteDifferenceStep = 1e-4;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> logistic(std::span<const double> theta) {
  std::vector<double> m(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) m[i] = logistic(theta[i]);
  return m;
}

struct Evaluation {
  double objective = 0.0;
  double distortion = 0.0;
  std::vector<double> gradient;  // d objective / d theta; empty when not computed
};

using Evaluator = std::function<Evaluation(std::span<const double> theta)>;

void check_finite(const Evaluation& e, const OptimizerTrace& trace, std::size_t iteration) {
  if (std::isfinite(e.objective)) return;
  std::string msg = "mask optimization: non-finite objective at iteration " + std::to_string(iteration);
  if (!trace.objective.empty()) msg += " (last finite objective " + std::to_string(trace.objective.back()) + ")";
  throw NumericError(msg);
}

// Forward differences in theta, used when the model has no input gradient.
std::vector<double> finite_difference_gradient(const Evaluator& eval, std::span<const double> theta, double base) {
  std::vector<double> probe(theta.begin(), theta.end());
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + kFiniteDifferenceStep;
    grad[i] = (eval(probe).objective - base) / kFiniteDifferenceStep;
    probe[i] = theta[i];
  }
  return grad;
}

// Gradient descent on theta. A step that raises the objective is halved up to
// `max_halvings` times; if it still does not descend the run stops.
OptimizerTrace descend(std::vector<double>& theta, const Evaluator& eval, std::size_t iterations, double step_size,
                       std::size_t max_halvings, bool finite_difference) {
  OptimizerTrace trace;
  trace.finite_difference = finite_difference;
  Evaluation current = eval(theta);
  check_finite(current, trace, 0);
  if (finite_difference) current.gradient = finite_difference_gradient(eval, theta, current.objective);
  trace.objective.push_back(current.objective);
  trace.distortion.push_back(current.distortion);

  std::vector<double> candidate(theta.size());
  for (std::size_t it = 1; it <= iterations; ++it) {
    double step = step_size;
    bool accepted = false;
    for (std::size_t h = 0; h <= max_halvings; ++h) {
      for (std::size_t i = 0; i < theta.size(); ++i) candidate[i] = theta[i] - step * current.gradient[i];
      Evaluation next = eval(candidate);
      check_finite(next, trace, it);
      if (next.objective <= current.objective) {
        theta = candidate;
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
      ++trace.halvings;
    }
    if (!accepted) {
      trace.stalled = true;
      break;
    }
    if (finite_difference) current.gradient = finite_difference_gradient(eval, theta, current.objective);
    trace.objective.push_back(current.objective);
    trace.distortion.push_back(current.distortion);
  }
  return trace;
}

struct Target {
  std::size_t index = 0;
  std::vector<double> distribution;  // yhat with every other class zeroed
  PredictionDistribution original;
};

Target resolve_target(const Classifier& model, const TimeSeries& ts, std::optional<std::size_t> target_class) {
  Target t;
  t.original = model.predict(ts);
  detail::require(t.original.size() == model.num_classes(), "explain: model returned wrong number of classes");
  t.index = target_class ? *target_class : argmax(t.original);
  detail::require(t.index < t.original.size(), "explain: target class " + std::to_string(t.index) +
                                                   " out of range for " + std::to_string(t.original.size()) +
                                                   " classes");
  t.distribution.assign(t.original.size(), 0.0);
  t.distribution[t.index] = t.original[t.index];
  return t;
}

std::vector<double> canonical_frequencies(const TimeSeries& ts) {
  std::vector<double> f(bin_count(ts.length));
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = bin_frequency(k, ts.length, ts.sample_rate);
  return f;
}

void check_unit_interval(double x, const std::string& what) {
  detail::require(std::isfinite(x) && x >= 0.0 && x <= 1.0, what + " must lie in [0, 1]");
}

}  // namespace

void Explanation::validate() const {
  detail::require(!saliency.empty(), "Explanation: empty saliency");
  for (double s : saliency) {
    detail::require(std::isfinite(s) && s >= 0.0, "Explanation: saliency must be finite and non-negative");
  }
  detail::require(channel_saliency.empty() || channel_saliency.size() == saliency.size() * channels,
                  "Explanation: channel saliency must be [K x V]");
}

void FlexConfig::validate() const {
  detail::require(bands >= 1, "FlexConfig: L must be >= 1");
  detail::require(taps >= kMinFilterbankTaps, "FlexConfig: N must be >= " + std::to_string(kMinFilterbankTaps));
  check_unit_interval(ratio, "FlexConfig: r");
  detail::require(iterations >= 1, "FlexConfig: iterations must be >= 1");
  detail::require(std::isfinite(step_size) && step_size > 0.0, "FlexConfig: step_size must be positive");
}

void DynamaskFreqConfig::validate() const {
  check_unit_interval(ratio, "DynamaskFreqConfig: r_a");
  detail::require(iterations >= 1, "DynamaskFreqConfig: iterations must be >= 1");
  detail::require(std::isfinite(step_size) && step_size > 0.0, "DynamaskFreqConfig: step_size must be positive");
}

void FreqRiseConfig::validate() const {
  detail::require(n_masks >= 1, "FreqRiseConfig: n_masks must be >= 1");
  detail::require(grid_size >= 2, "FreqRiseConfig: grid_size must be >= 2");
  detail::require(keep_probability > 0.0 && keep_probability < 1.0, "FreqRiseConfig: p must lie in (0, 1)");
}

double distortion_loss(std::span<const double> yhat, std::span<const double> yhat_masked, std::size_t target_class) {
  detail::require(yhat.size() == yhat_masked.size(), "distortion_loss: distributions differ in length");
  detail::require(target_class < yhat.size(), "distortion_loss: target class out of range");
  return -yhat[target_class] * std::log(std::max(yhat_masked[target_class], kProbabilityFloor));
}

double sparsity_penalty(std::span<const double> mask, double ratio) {
  check_unit_interval(ratio, "sparsity_penalty: r");
  if (mask.empty()) return 0.0;
  double sum = 0.0;
  for (double m : mask) sum += std::abs(m);
  return std::max(sum / static_cast<double>(mask.size()) - ratio, 0.0);
}

std::vector<Complex> spectral_gradient(std::span<const double> gradient, std::size_t length, std::size_t channels) {
  detail::require(gradient.size() == length * channels, "spectral_gradient: gradient must be [T x V]");
  const std::size_t K = bin_count(length);
  std::vector<Complex> out(K * channels);
  std::vector<double> column(length);
  std::vector<Complex> G(K);
  const double inv_t = 1.0 / static_cast<double>(length);
  for (std::size_t v = 0; v < channels; ++v) {
    for (std::size_t t = 0; t < length; ++t) column[t] = gradient[t * channels + v];
    rfft(column, G);
    for (std::size_t k = 0; k < K; ++k) {
      // Bins other than DC and Nyquist stand for a conjugate pair.
      const bool single = k == 0 || (length % 2 == 0 && k == K - 1);
      out[k * channels + v] = (single ? 1.0 : 2.0) * inv_t * G[k];
    }
  }
  return out;
}

FlexResult flextime_explain(const Classifier& model, const TimeSeries& ts, const Filterbank& fb,
                            std::optional<std::size_t> target_class, const FlexConfig& cfg) {
  cfg.validate();
  ts.validate();
  fb.validate();
  detail::require(fb.sample_rate == ts.sample_rate, "flextime_explain: filterbank and signal sample rates differ");
  detail::require(fb.band_count() == cfg.bands && fb.tap_count() == odd_tap_count(cfg.taps),
                  "flextime_explain: filterbank does not match the configured L and N");
  const Target target = resolve_target(model, ts, target_class);
  const BandDecomposition dec = decompose(ts, fb);
  const std::size_t L = dec.band_count;
  const bool use_gradient = model.has_input_gradient();

  BandMask mask = BandMask::zeros(L);
  const Evaluator eval = [&](std::span<const double> theta) {
    mask.values = logistic(theta);
    const TimeSeries xm = masked_reconstruct(dec, mask);
    Evaluation e;
    PredictionDistribution probs;
    std::vector<double> g;
    if (use_gradient) {
      LossGradient lg = model.loss_and_input_gradient(xm, target.distribution);
      probs = std::move(lg.probabilities);
      g = std::move(lg.input_gradient);
    } else {
      probs = model.predict(xm);
    }
    e.distortion = distortion_loss(target.original, probs, target.index);
    const double penalty = sparsity_penalty(mask.values, cfg.ratio);
    e.objective = e.distortion + penalty;
    if (use_gradient) {
      const double hinge = penalty > 0.0 ? 1.0 / static_cast<double>(L) : 0.0;
      e.gradient.resize(L);
      for (std::size_t l = 0; l < L; ++l) {
        const auto band = dec.band(l);
        double dot = 0.0;
        for (std::size_t i = 0; i < band.size(); ++i) dot += g[i] * band[i];
        const double m = mask.values[l];
        e.gradient[l] = (dot + hinge) * m * (1.0 - m);
      }
    }
    return e;
  };

  std::vector<double> theta(L, 0.0);
  FlexResult result;
  result.explanation.trace = descend(theta, eval, cfg.iterations, cfg.step_size, cfg.max_halvings, !use_gradient);
  result.mask.values = logistic(theta);

  Explanation& ex = result.explanation;
  ex.method = "flextime";
  ex.target_class = target.index;
  ex.channels = ts.channels;
  ex.mask = result.mask.values;
  ex.saliency = collected_response_at(fb, result.mask, canonical_frequencies(ts));
  return result;
}

Explanation dynamask_freq_explain(const Classifier& model, const TimeSeries& ts,
                                  std::optional<std::size_t> target_class, const DynamaskFreqConfig& cfg) {
  cfg.validate();
  ts.validate();
  const Target target = resolve_target(model, ts, target_class);
  const Spectrum spec = forward_dft(ts);
  const PerturbationSpectrum pert = moving_average_perturbation(spec, cfg.window);
  const std::size_t K = spec.bins;
  const std::size_t V = spec.channels;
  const bool use_gradient = model.has_input_gradient();

  FrequencyMask mask = FrequencyMask::zeros(K);
  const Evaluator eval = [&](std::span<const double> theta) {
    mask.values = logistic(theta);
    const TimeSeries xm = dft_mask_apply(spec, mask, pert);
    Evaluation e;
    PredictionDistribution probs;
    std::vector<double> g;
    if (use_gradient) {
      LossGradient lg = model.loss_and_input_gradient(xm, target.distribution);
      probs = std::move(lg.probabilities);
      g = std::move(lg.input_gradient);
    } else {
      probs = model.predict(xm);
    }
    e.distortion = distortion_loss(target.original, probs, target.index);
    const double penalty = sparsity_penalty(mask.values, cfg.ratio);
    e.objective = e.distortion + penalty;
    if (use_gradient) {
      const auto G = spectral_gradient(g, ts.length, V);
      const double hinge = penalty > 0.0 ? 1.0 / static_cast<double>(K) : 0.0;
      e.gradient.resize(K);
      for (std::size_t k = 0; k < K; ++k) {
        double dot = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
          dot += std::real(std::conj(G[k * V + v]) * (spec.at(k, v) - pert.at(k, v)));
        }
        const double m = mask.values[k];
        e.gradient[k] = (dot + hinge) * m * (1.0 - m);
      }
    }
    return e;
  };

  std::vector<double> theta(K, 0.0);
  Explanation ex;
  ex.trace = descend(theta, eval, cfg.iterations, cfg.step_size, cfg.max_halvings, !use_gradient);
  ex.method = "dynamask_freq";
  ex.target_class = target.index;
  ex.channels = V;
  ex.mask = logistic(theta);
  ex.saliency = ex.mask;
  return ex;
}

}  // namespace flextime
