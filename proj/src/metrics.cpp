// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include "flextime/error.hpp"
#include "flextime/filterbank.hpp"
#include "flextime/log.hpp"
#include "flextime/parallel.hpp"

namespace flextime {
namespace {

struct Counts {
  std::size_t selected = 0;
  std::size_t hits = 0;
};

std::span<const double> features(const Explanation& expl) {
  return expl.channel_saliency.empty() ? std::span<const double>(expl.saliency)
                                       : std::span<const double>(expl.channel_saliency);
}

void check_saliency(std::span<const double> s, const char* who) {
  for (double x : s) detail::require(std::isfinite(x) && x >= 0.0, std::string(who) + ": saliency must be finite and non-negative");
}

}  // namespace

LocalizationScores localization(std::span<const double> saliency, const std::vector<bool>& gt) {
  detail::require(saliency.size() == gt.size(), "localization: saliency and ground truth differ in length");
  check_saliency(saliency, "localization");
  const std::size_t K = saliency.size();
  const auto positives = static_cast<std::size_t>(std::count(gt.begin(), gt.end(), true));
  detail::require(positives > 0, "localization: ground truth has no positive bins");
  const double prevalence = static_cast<double>(positives) / static_cast<double>(K);

  const double peak = *std::max_element(saliency.begin(), saliency.end());
  if (!(peak > 0.0)) return {0.0, 0.0, prevalence};

  LocalizationScores out;
  for (std::size_t i = 0; i < kLocalizationLevels; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(kLocalizationLevels - 1);
    Counts c;
    for (std::size_t k = 0; k < K; ++k) {
      if (saliency[k] / peak >= tau) {
        ++c.selected;
        c.hits += gt[k] ? 1 : 0;
      }
    }
    out.aup += static_cast<double>(c.hits) / static_cast<double>(c.selected);
    out.aur += static_cast<double>(c.hits) / static_cast<double>(positives);
  }
  out.aup /= static_cast<double>(kLocalizationLevels);
  out.aur /= static_cast<double>(kLocalizationLevels);

  // One operating point per distinct saliency value, in decreasing threshold order.
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return saliency[a] > saliency[b]; });
  std::vector<double> precision, recall;
  Counts c;
  for (std::size_t i = 0; i < K; ++i) {
    ++c.selected;
    c.hits += gt[order[i]] ? 1 : 0;
    if (i + 1 < K && saliency[order[i + 1]] == saliency[order[i]]) continue;
    const double p = static_cast<double>(c.hits) / static_cast<double>(c.selected);
    const double r = static_cast<double>(c.hits) / static_cast<double>(positives);
    // Operating points that add no recall collapse onto the best precision at that recall.
    if (!recall.empty() && recall.back() == r) {
      precision.back() = std::max(precision.back(), p);
      continue;
    }
    precision.push_back(p);
    recall.push_back(r);
  }
  // Interpolated precision: best precision at any recall at least as large.
  for (std::size_t i = precision.size() - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
  double prev_recall = 0.0;
  double prev_precision = precision.front();
  for (std::size_t i = 0; i < precision.size(); ++i) {
    out.auprc += (recall[i] - prev_recall) * (precision[i] + prev_precision) / 2.0;
    prev_recall = recall[i];
    prev_precision = precision[i];
  }
  return out;
}

LocalizationScores localization(const Explanation& expl, const std::vector<bool>& gt) {
  return localization(expl.saliency, gt);
}

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count) {
  count = std::min(count, values.size());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
  order.resize(count);
  return order;
}

double faithfulness(const Classifier& model, const TimeSeries& ts, const Explanation& expl, std::size_t target_class,
                    double keep_fraction) {
  detail::require(keep_fraction > 0.0 && keep_fraction <= 1.0, "faithfulness: keep_fraction must lie in (0, 1]");
  detail::require(target_class < model.num_classes(), "faithfulness: target class out of range");
  const std::size_t K = bin_count(ts.length);
  detail::require(expl.saliency.size() == K, "faithfulness: saliency does not match the signal's frequency grid");
  check_saliency(expl.saliency, "faithfulness");
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(K) - 1e-9));
  // Keeping every bin is the identity; skip the round trip through the DFT.
  if (keep >= K) return model.predict(ts)[target_class];
  FrequencyMask mask = FrequencyMask::zeros(K);
  for (std::size_t k : top_indices(expl.saliency, keep)) mask.values[k] = 1.0;
  const Spectrum spec = forward_dft(ts);
  return model.predict(dft_mask_apply(spec, mask, zero_perturbation(spec)))[target_class];
}

double complexity(std::span<const double> saliency, bool* degenerate) {
  double total = 0.0;
  for (double s : saliency) {
    detail::require(std::isfinite(s) && s >= 0.0, "complexity: saliency must be finite and non-negative");
    total += s;
  }
  if (degenerate) *degenerate = !(total > 0.0);
  if (!(total > 0.0)) {
    warn("complexity: all-zero saliency, reporting 0");
    return 0.0;
  }
  double h = 0.0;
  for (double s : saliency) {
    if (s > 0.0) {
      const double q = s / total;
      h -= q * std::log(q);
    }
  }
  return std::max(h, 0.0);
}

double complexity(const Explanation& expl, bool* degenerate) { return complexity(features(expl), degenerate); }

void RobustnessConfig::validate() const {
  detail::require(n_perturbations >= 1, "RobustnessConfig: n_perturbations must be >= 1");
  detail::require(std::isfinite(noise_std_fraction) && noise_std_fraction >= 0.0,
                  "RobustnessConfig: noise_std_fraction must be >= 0");
}

std::optional<double> robustness_max_sensitivity(const ExplainFn& explain, const TimeSeries& ts,
                                                 const RobustnessConfig& cfg) {
  cfg.validate();
  ts.validate();
  const Explanation base = explain(ts);
  const auto e0 = features(base);
  double norm0 = 0.0;
  for (double v : e0) norm0 += v * v;
  norm0 = std::sqrt(norm0);
  if (!(norm0 > 0.0)) return std::nullopt;

  const double n = static_cast<double>(ts.samples.size());
  const double mean = std::accumulate(ts.samples.begin(), ts.samples.end(), 0.0) / n;
  double var = 0.0;
  for (double x : ts.samples) var += (x - mean) * (x - mean);
  const double sigma = cfg.noise_std_fraction * std::sqrt(var / n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  double worst = 0.0;
  TimeSeries perturbed = ts;
  for (std::size_t i = 0; i < cfg.n_perturbations; ++i) {
    for (std::size_t j = 0; j < ts.samples.size(); ++j) perturbed.samples[j] = ts.samples[j] + sigma * noise(rng);
    const Explanation e = explain(perturbed);
    const auto ei = features(e);
    detail::require(ei.size() == e0.size(), "robustness: explanation size changed under perturbation");
    double diff = 0.0;
    for (std::size_t k = 0; k < ei.size(); ++k) diff += (ei[k] - e0[k]) * (ei[k] - e0[k]);
    worst = std::max(worst, std::sqrt(diff) / norm0);
  }
  return worst;
}

void TuneGrid::validate(bool needs_filterbank) const {
  detail::require(!ratios.empty(), "TuneGrid: r candidates must be non-empty");
  for (double r : ratios) detail::require(r >= 0.0 && r <= 1.0, "TuneGrid: r candidates must lie in [0, 1]");
  if (needs_filterbank) {
    detail::require(!bands.empty() && !taps.empty(), "TuneGrid: L and N candidates must be non-empty");
    for (auto l : bands) detail::require(l >= 1, "TuneGrid: L candidates must be >= 1");
    for (auto n : taps) {
      detail::require(n >= kMinFilterbankTaps, "TuneGrid: N candidates must be >= " + std::to_string(kMinFilterbankTaps));
    }
  }
  detail::require(subsample >= 1, "TuneGrid: subsample must be >= 1");
  detail::require(tie_tolerance >= 0.0, "TuneGrid: tie tolerance must be >= 0");
}

std::vector<TuneCandidate> TuneGrid::candidates(bool needs_filterbank) const {
  std::vector<TuneCandidate> out;
  const std::vector<std::size_t> none{0};
  for (auto l : needs_filterbank ? bands : none) {
    for (auto n : needs_filterbank ? taps : none) {
      for (double r : ratios) out.push_back({l, n, r});
    }
  }
  return out;
}

TuneResult select_hyperparameters(const std::vector<TuneCandidate>& candidates, const TuneEvaluator& evaluate,
                                  double tie_tolerance) {
  detail::require(!candidates.empty(), "tune: empty candidate grid");
  TuneResult result;
  result.candidates = candidates;
  double best_faith = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    result.scores.push_back(evaluate(c));
    best_faith = std::max(best_faith, result.scores.back().faithfulness);
  }
  std::size_t best = candidates.size();
  auto key = [&](std::size_t i) {
    return std::make_tuple(result.scores[i].complexity, candidates[i].bands, candidates[i].taps, candidates[i].ratio);
  };
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (result.scores[i].faithfulness < best_faith - tie_tolerance) continue;
    if (best == candidates.size() || key(i) < key(best)) best = i;
  }
  result.best = candidates[best];
  return result;
}

TunableMethod tunable_method_from_string(const std::string& name) {
  if (name == "flextime") return TunableMethod::FlexTime;
  if (name == "dynamask_freq") return TunableMethod::DynamaskFreq;
  detail::fail("tune: unknown method '" + name + "' (expected flextime or dynamask_freq)");
}

TuneResult tune_hyperparameters(TunableMethod method, const Classifier& model, std::span<const TimeSeries> inputs,
                                std::span<const int> labels, const TuneGrid& grid, const FlexConfig& flex_base,
                                const DynamaskFreqConfig& dynamask_base, std::size_t workers) {
  const bool flex = method == TunableMethod::FlexTime;
  grid.validate(flex);
  detail::require(!inputs.empty(), "tune: validation split is empty");
  detail::require(inputs.size() == labels.size(), "tune: inputs and labels differ in length");

  // Seeded partial Fisher-Yates; evaluation order is the sorted index list.
  std::vector<std::size_t> pool(inputs.size());
  std::iota(pool.begin(), pool.end(), 0);
  const std::size_t n = std::min(grid.subsample, pool.size());
  std::mt19937_64 rng(grid.seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());

  const TuneEvaluator evaluate = [&](const TuneCandidate& c) {
    std::optional<Filterbank> fb;
    if (flex) fb = design_filterbank(c.bands, c.taps, inputs[pool.front()].sample_rate);
    std::vector<TuneScore> per(n);
    parallel_for(n, workers, [&](std::size_t i) {
      const TimeSeries& ts = inputs[pool[i]];
      Explanation e;
      if (flex) {
        FlexConfig cfg = flex_base;
        cfg.bands = c.bands;
        cfg.taps = c.taps;
        cfg.ratio = c.ratio;
        e = flextime_explain(model, ts, *fb, std::nullopt, cfg).explanation;
      } else {
        DynamaskFreqConfig cfg = dynamask_base;
        cfg.ratio = c.ratio;
        e = dynamask_freq_explain(model, ts, std::nullopt, cfg);
      }
      per[i].faithfulness = faithfulness(model, ts, e, static_cast<std::size_t>(labels[pool[i]]));
      per[i].complexity = complexity(e);
    });
    TuneScore mean;
    for (const auto& s : per) {
      mean.faithfulness += s.faithfulness;
      mean.complexity += s.complexity;
    }
    mean.faithfulness /= static_cast<double>(n);
    mean.complexity /= static_cast<double>(n);
    return mean;
  };
  return select_hyperparameters(grid.candidates(flex), evaluate, grid.tie_tolerance);
}

}  // namespace flextime
