// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "flextime/explain.hpp"
#include "flextime/metrics.hpp"
#include "flextime/model.hpp"
#include "flextime/synthdata.hpp"

namespace flextime::app {

struct DataSettings {
  SynthConfig synth;
  std::size_t n_train = 10000;
  std::size_t n_val = 1000;
  std::size_t n_test = 992;
};

struct ModelSettings {
  std::size_t width1 = 64;
  std::size_t width2 = 64;
  std::size_t kernel = 31;
};

struct ExplainSettings {
  std::vector<std::string> methods{"flextime"};
  std::size_t max_samples = 0;  // 0: whole test split
  bool svg = true;
  std::size_t ig_steps = 50;
};

struct MetricSettings {
  double keep_fraction = 0.10;
  RobustnessConfig robustness;
  std::size_t robustness_samples = 0;  // 0 disables the robustness column
  bool random_control = true;
};

struct GibbsSettings {
  double low_hz = 124.0;
  double high_hz = 130.0;
  std::size_t taps = 8193;
  double sample_rate = 8000.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  DataSettings data;
  ModelSettings model;
  TrainConfig train;
  FlexConfig flextime;
  DynamaskFreqConfig dynamask_freq;
  FreqRiseConfig freqrise;
  ExplainSettings explain;
  MetricSettings metrics;
  TuneGrid tune;
  GibbsSettings gibbs;

  ModelSpec model_spec() const;
  /// Pushes the top-level seed and worker count into the component configs.
  void propagate();
  void validate() const;
};

/// Parses and validates. Unknown keys and wrong types raise ValidationError naming the JSON path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace flextime::app
