// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flextime/app/commands.hpp"
#include "flextime/app/config.hpp"
#include "flextime/error.hpp"

namespace fs = std::filesystem;
using namespace flextime;
using namespace flextime::app;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool force = false;
};

void add_globals(CLI::App& cmd, Globals& g) {
  cmd.add_option("--config", g.config, "JSON run configuration")->envname("FLEX_CONFIG");
  cmd.add_option("--seed", g.seed, "master seed (overrides the config)")->envname("FLEX_SEED");
  cmd.add_option("--workers", g.workers, "worker threads (overrides the config)")->envname("FLEX_WORKERS")
      ->check(CLI::PositiveNumber);
  cmd.add_flag("--force", g.force, "overwrite existing outputs")->envname("FLEX_FORCE");
}

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config.empty() ? parse_config(nlohmann::json::object()) : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  cfg.propagate();
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flextime: frequency-band explanations for time-series classifiers"};
  app.require_subcommand(1);
  Globals g;

  std::string out, data, model, explanations, method;
  std::vector<std::string> methods, runs;
  std::vector<double> band;
  std::optional<std::size_t> taps;

  auto* gen = app.add_subcommand("gen", "generate the synthetic train/val/test splits");
  add_globals(*gen, g);
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train the classifier");
  add_globals(*train, g);
  train->add_option("--data", data, "dataset directory from 'gen'")->required();
  train->add_option("--model", model, "output weight file")->required();

  auto* explain = app.add_subcommand("explain", "explain test samples");
  add_globals(*explain, g);
  explain->add_option("--method", methods, "flextime, dynamask_freq, freqrise, saliency, gxi or ig (repeatable)");
  explain->add_option("--model", model, "weight file")->required();
  explain->add_option("--data", data, "dataset directory")->required();
  explain->add_option("--out", out, "output directory")->required();

  auto* metrics = app.add_subcommand("metrics", "evaluate explanations");
  add_globals(*metrics, g);
  metrics->add_option("--model", model, "weight file");
  metrics->add_option("--data", data, "dataset directory");
  metrics->add_option("--explanations", explanations, "directory from 'explain'");
  metrics->add_option("--run", runs, "MODEL,DATA,EXPLANATIONS triple (repeatable; aggregates mean/std)");
  metrics->add_option("--out", out, "report directory")->required();

  auto* tune = app.add_subcommand("tune", "grid-search explainer hyperparameters on the validation split");
  add_globals(*tune, g);
  tune->add_option("--method", method, "flextime or dynamask_freq")->default_val("flextime");
  tune->add_option("--model", model, "weight file")->required();
  tune->add_option("--data", data, "dataset directory")->required();
  tune->add_option("--out", out, "output JSON file")->required();

  auto* demo = app.add_subcommand("demo", "demonstrations");
  demo->require_subcommand(1);
  auto* gibbs = demo->add_subcommand("gibbs", "FIR vs DFT-zeroing stopband comparison");
  add_globals(*gibbs, g);
  gibbs->add_option("--band", band, "LOW HIGH in Hz")->expected(2);
  gibbs->add_option("--taps", taps, "filter length");
  gibbs->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    RunConfig cfg = resolve(g);
    if (*gen) {
      cmd_gen(cfg, out, g.force);
    } else if (*train) {
      cmd_train(cfg, data, model, g.force);
    } else if (*explain) {
      cmd_explain(cfg, methods.empty() ? cfg.explain.methods : methods, model, data, out, g.force);
    } else if (*metrics) {
      std::vector<MetricRun> list;
      if (!model.empty() || !data.empty() || !explanations.empty()) {
        if (model.empty() || data.empty() || explanations.empty()) {
          throw ValidationError("metrics: --model, --data and --explanations go together");
        }
        list.push_back({model, data, explanations});
      }
      for (const auto& r : runs) {
        const auto parts = split_commas(r);
        if (parts.size() != 3) throw ValidationError("metrics: --run expects MODEL,DATA,EXPLANATIONS");
        list.push_back({parts[0], parts[1], parts[2]});
      }
      cmd_metrics(cfg, list, out, g.force);
    } else if (*tune) {
      std::cout << cmd_tune(cfg, method, model, data, out, g.force).dump(2) << "\n";
    } else if (*gibbs) {
      if (!band.empty()) {
        cfg.gibbs.low_hz = band[0];
        cfg.gibbs.high_hz = band[1];
      }
      if (taps) cfg.gibbs.taps = *taps;
      cfg.validate();
      std::cout << cmd_demo_gibbs(cfg, out, g.force).dump(2) << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
