// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flextime/explain.hpp"
#include "flextime/model.hpp"
#include "flextime/signal.hpp"

namespace flextime {

struct LocalizationScores {
  double aup = 0.0;
  double aur = 0.0;
  double auprc = 0.0;
};

/// Number of evenly spaced thresholds in [0, 1] used for AUP and AUR.
inline constexpr std::size_t kLocalizationLevels = 101;

/// AUP/AUR: mean precision/recall over kLocalizationLevels thresholds of the
/// max-normalized saliency (a bin is selected when s / max(s) >= tau).
/// AUPRC: trapezoidal area under the interpolated precision-recall curve over
/// every distinct saliency value, anchored at recall 0.
/// All-zero saliency scores AUP = AUR = 0 and AUPRC = prevalence.
LocalizationScores localization(std::span<const double> saliency, const std::vector<bool>& ground_truth);
LocalizationScores localization(const Explanation& expl, const std::vector<bool>& ground_truth);

/// Indices of the `count` largest values, ties going to the lower index.
std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t count);

/// Probability of `target_class` after zeroing every DFT bin except the top
/// ceil(keep_fraction * K) by saliency.
double faithfulness(const Classifier& model, const TimeSeries& ts, const Explanation& expl, std::size_t target_class,
                    double keep_fraction = 0.10);

/// Natural-log entropy of the normalized saliency (per-channel saliency when present).
/// All-zero saliency gives 0 and sets `degenerate`.
double complexity(std::span<const double> saliency, bool* degenerate = nullptr);
double complexity(const Explanation& expl, bool* degenerate = nullptr);

struct RobustnessConfig {
  std::size_t n_perturbations = 10;
  double noise_std_fraction = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

using ExplainFn = std::function<Explanation(const TimeSeries&)>;

/// max_i ||e(x + d_i) - e(x)|| / ||e(x)|| over Gaussian time-domain perturbations
/// with std noise_std_fraction * std(x). Empty when ||e(x)|| = 0.
std::optional<double> robustness_max_sensitivity(const ExplainFn& explain, const TimeSeries& ts,
                                                 const RobustnessConfig& cfg);

struct TuneCandidate {
  std::size_t bands = 0;  // L (flextime only)
  std::size_t taps = 0;   // N (flextime only)
  double ratio = 0.0;     // r
};

struct TuneScore {
  double faithfulness = 0.0;
  double complexity = 0.0;
};

struct TuneGrid {
  std::vector<std::size_t> bands;
  std::vector<std::size_t> taps;
  std::vector<double> ratios;
  std::size_t subsample = 100;
  std::uint64_t seed = 0;
  double tie_tolerance = 1e-3;

  void validate(bool needs_filterbank) const;
  /// Cartesian product in (L, N, r) order; L and N are left at 0 without a filterbank.
  std::vector<TuneCandidate> candidates(bool needs_filterbank) const;
};

struct TuneResult {
  TuneCandidate best;
  std::vector<TuneCandidate> candidates;
  std::vector<TuneScore> scores;
};

using TuneEvaluator = std::function<TuneScore(const TuneCandidate&)>;

/// Highest faithfulness wins; candidates within the tie tolerance of the best are
/// separated by lower complexity, then smaller L, N and r.
TuneResult select_hyperparameters(const std::vector<TuneCandidate>& candidates, const TuneEvaluator& evaluate,
                                  double tie_tolerance = 1e-3);

enum class TunableMethod { FlexTime, DynamaskFreq };

TunableMethod tunable_method_from_string(const std::string& name);

/// Grid search on a seeded subsample of the validation split, scoring mean
/// faithfulness at 10% kept bins against the true labels.
TuneResult tune_hyperparameters(TunableMethod method, const Classifier& model, std::span<const TimeSeries> inputs,
                                std::span<const int> labels, const TuneGrid& grid, const FlexConfig& flex_base,
                                const DynamaskFreqConfig& dynamask_base, std::size_t workers = 1);

}  // namespace flextime
