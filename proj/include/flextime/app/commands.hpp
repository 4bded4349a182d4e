// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "flextime/app/config.hpp"
#include "flextime/model.hpp"

namespace flextime::app {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

/// A split read back from disk.
struct LoadedSplit {
  std::vector<TimeSeries> inputs;
  std::vector<int> labels;
  std::vector<std::vector<bool>> ground_truth;  // [n][K]
};

void save_split(const fs::path& path, const SynthSplit& split, const SynthConfig& cfg);
LoadedSplit load_split(const fs::path& path);

struct LoadedModel {
  ModelSpec spec;
  ModelParams params;
};

/// Writes <path> (weights), <path>.json (architecture) and, when given, <path>.log.json.
void save_model(const fs::path& path, const ModelSpec& spec, const ModelParams& params,
                const nlohmann::json* training_log = nullptr);
LoadedModel load_model(const fs::path& path);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Serializes with a trailing newline; shortest round-trip doubles.
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// Writes train/val/test containers and manifest.json into `out_dir`.
void cmd_gen(const RunConfig& cfg, const fs::path& out_dir, bool force);

/// Trains on <data>/train.flxt with early stopping on <data>/val.flxt; reports
/// accuracy on <data>/test.flxt in the training log.
nlohmann::json cmd_train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& model_out, bool force);

/// One JSON (and optionally SVG) per test sample and method under <out_dir>/<method>/.
void cmd_explain(const RunConfig& cfg, const std::vector<std::string>& methods, const fs::path& model_path,
                 const fs::path& data_dir, const fs::path& out_dir, bool force);

struct MetricRun {
  fs::path model;
  fs::path data;
  fs::path explanations;
};

/// Aggregates metrics over one or more (model, data, explanations) runs into
/// <out_dir>/metrics.json and <out_dir>/metrics.csv. Returns the JSON report.
nlohmann::json cmd_metrics(const RunConfig& cfg, const std::vector<MetricRun>& runs, const fs::path& out_dir,
                           bool force);

/// Grid search on <data>/val.flxt. Writes the chosen hyperparameters to `out_path`.
nlohmann::json cmd_tune(const RunConfig& cfg, const std::string& method, const fs::path& model_path,
                        const fs::path& data_dir, const fs::path& out_path, bool force);

/// Hamming FIR vs DFT-zeroing comparison: gibbs.json plus time and response SVGs.
nlohmann::json cmd_demo_gibbs(const RunConfig& cfg, const fs::path& out_dir, bool force);

/// CSV rendering of a metrics report (one row per method).
std::string metrics_csv(const nlohmann::json& report);

}  // namespace flextime::app
