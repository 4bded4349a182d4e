// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/app/config.hpp"

#include <concepts>
#include <fstream>
#include <limits>
#include <optional>
#include <set>

#include "flextime/error.hpp"

namespace flextime::app {
namespace {

using nlohmann::json;

// Collects every schema problem in the document before failing.
struct Diagnostics {
  std::vector<std::string> errors;
  void add(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }
};

class Object {
 public:
  Object(const json* node, std::string path, Diagnostics& diag) : node_(node), path_(std::move(path)), diag_(diag) {
    if (node_ && !node_->is_object()) {
      diag_.add(path_, "expected an object");
      node_ = nullptr;
    }
  }

  ~Object() {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) diag_.add(child_path(key), "unknown key");
    }
  }

  Object child(const std::string& key) { return Object(find(key), child_path(key), diag_); }

  template <std::unsigned_integral U>
  void read(const std::string& key, U& out) {
    if (const json* v = find(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        out = v->get<U>();
      } else {
        diag_.add(child_path(key), "expected a non-negative integer");
      }
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        diag_.add(child_path(key), "expected a number");
      }
    }
  }

  void read(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        diag_.add(child_path(key), "expected a number or null");
      }
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        diag_.add(child_path(key), "expected true or false");
      }
    }
  }

  template <class T>
  void read(const std::string& key, std::vector<T>& out) {
    const json* v = find(key);
    if (!v) return;
    if (!v->is_array()) {
      diag_.add(child_path(key), "expected an array");
      return;
    }
    std::vector<T> values;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      const std::string p = child_path(key) + "[" + std::to_string(i) + "]";
      if constexpr (std::is_same_v<T, std::string>) {
        if (!e.is_string()) return diag_.add(p, "expected a string");
        values.push_back(e.get<std::string>());
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!e.is_number()) return diag_.add(p, "expected a number");
        values.push_back(e.get<double>());
      } else {
        if (!(e.is_number_unsigned() || (e.is_number_integer() && e.get<std::int64_t>() >= 0))) {
          return diag_.add(p, "expected a non-negative integer");
        }
        values.push_back(e.get<T>());
      }
    }
    out = std::move(values);
  }

 private:
  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  std::string child_path(const std::string& key) const { return path_ + "." + key; }

  const json* node_;
  std::string path_;
  Diagnostics& diag_;
  std::set<std::string> seen_;
};

}  // namespace

ModelSpec RunConfig::model_spec() const {
  return ModelSpec::conv_pool(data.synth.length, data.synth.class_count(), model.width1, model.width2, model.kernel);
}

void RunConfig::propagate() {
  data.synth.seed = seed;
  train.seed = seed;
  train.workers = workers;
  freqrise.seed = seed;
  freqrise.workers = 1;  // parallelism is across samples
  metrics.robustness.seed = seed;
  tune.seed = seed;
}

void RunConfig::validate() const {
  detail::require(workers >= 1, "workers must be >= 1");
  data.synth.validate();
  detail::require(data.n_train >= 1 && data.n_val >= 1 && data.n_test >= 1, "data: split sizes must be >= 1");
  detail::require(model.width1 >= 1 && model.width2 >= 1, "model: widths must be >= 1");
  detail::require(model.kernel % 2 == 1, "model: kernel must be odd");
  (void)model_spec();
  train.validate();
  flextime.validate();
  dynamask_freq.validate();
  freqrise.validate();
  for (const auto& m : explain.methods) {
    detail::require(m == "flextime" || m == "dynamask_freq" || m == "freqrise" || m == "saliency" || m == "gxi" ||
                        m == "ig",
                    "explain: unknown method '" + m + "'");
  }
  detail::require(explain.ig_steps >= 1, "explain: ig_steps must be >= 1");
  detail::require(metrics.keep_fraction > 0.0 && metrics.keep_fraction <= 1.0,
                  "metrics: keep_fraction must lie in (0, 1]");
  metrics.robustness.validate();
  tune.validate(true);
  detail::require(gibbs.sample_rate > 0.0 && gibbs.low_hz > 0.0 && gibbs.low_hz < gibbs.high_hz &&
                      gibbs.high_hz < gibbs.sample_rate / 2.0,
                  "gibbs: need 0 < low_hz < high_hz < sample_rate / 2");
  detail::require(gibbs.taps >= 3, "gibbs: taps must be >= 3");
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  cfg.tune.bands = {16, 32, 64};
  cfg.tune.taps = {129, 257, 501};
  cfg.tune.ratios = {0.05, 0.1, 0.2};
  Diagnostics diag;
  {
    Object root(&doc, "$", diag);
    root.read("seed", cfg.seed);
    root.read("workers", cfg.workers);
    {
      auto d = root.child("data");
      auto& s = cfg.data.synth;
      d.read("length", s.length);
      d.read("sample_rate", s.sample_rate);
      d.read("bin_count", s.bin_count);
      std::vector<std::size_t> salient(s.salient_bins.begin(), s.salient_bins.end());
      d.read("salient_bins", salient);
      if (salient.size() == s.salient_bins.size()) {
        std::copy(salient.begin(), salient.end(), s.salient_bins.begin());
      } else {
        diag.add("$.data.salient_bins", "expected exactly " + std::to_string(s.salient_bins.size()) + " entries");
      }
      d.read("tones_per_bin", s.tones_per_bin);
      d.read("bins_min", s.bins_min);
      d.read("bins_max", s.bins_max);
      d.read("noise_std", s.noise_std);
      d.read("voigt_sigma", s.voigt_sigma);
      d.read("voigt_gamma", s.voigt_gamma);
      d.read("n_train", cfg.data.n_train);
      d.read("n_val", cfg.data.n_val);
      d.read("n_test", cfg.data.n_test);
    }
    {
      auto m = root.child("model");
      m.read("width1", cfg.model.width1);
      m.read("width2", cfg.model.width2);
      m.read("kernel", cfg.model.kernel);
    }
    {
      auto t = root.child("train");
      t.read("max_epochs", cfg.train.max_epochs);
      t.read("learning_rate", cfg.train.learning_rate);
      t.read("batch_size", cfg.train.batch_size);
      t.read("patience", cfg.train.patience);
    }
    {
      auto f = root.child("flextime");
      f.read("L", cfg.flextime.bands);
      f.read("N", cfg.flextime.taps);
      f.read("r", cfg.flextime.ratio);
      f.read("iterations", cfg.flextime.iterations);
      f.read("step_size", cfg.flextime.step_size);
    }
    {
      auto f = root.child("dynamask_freq");
      f.read("r", cfg.dynamask_freq.ratio);
      f.read("W", cfg.dynamask_freq.window);
      f.read("iterations", cfg.dynamask_freq.iterations);
      f.read("step_size", cfg.dynamask_freq.step_size);
    }
    {
      auto f = root.child("freqrise");
      f.read("n_masks", cfg.freqrise.n_masks);
      f.read("grid_size", cfg.freqrise.grid_size);
      f.read("keep_probability", cfg.freqrise.keep_probability);
    }
    {
      auto e = root.child("explain");
      e.read("methods", cfg.explain.methods);
      e.read("max_samples", cfg.explain.max_samples);
      e.read("svg", cfg.explain.svg);
      e.read("ig_steps", cfg.explain.ig_steps);
    }
    {
      auto m = root.child("metrics");
      m.read("keep_fraction", cfg.metrics.keep_fraction);
      m.read("random_control", cfg.metrics.random_control);
      auto r = m.child("robustness");
      r.read("samples", cfg.metrics.robustness_samples);
      r.read("n_perturbations", cfg.metrics.robustness.n_perturbations);
      r.read("noise_std_fraction", cfg.metrics.robustness.noise_std_fraction);
    }
    {
      auto t = root.child("tune");
      t.read("L", cfg.tune.bands);
      t.read("N", cfg.tune.taps);
      t.read("r", cfg.tune.ratios);
      t.read("subsample", cfg.tune.subsample);
    }
    {
      auto g = root.child("gibbs");
      g.read("low_hz", cfg.gibbs.low_hz);
      g.read("high_hz", cfg.gibbs.high_hz);
      g.read("taps", cfg.gibbs.taps);
      g.read("sample_rate", cfg.gibbs.sample_rate);
    }
  }
  if (!diag.errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : diag.errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  cfg.propagate();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  const auto& s = c.data.synth;
  json j;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["data"] = {{"length", s.length},
               {"sample_rate", s.sample_rate},
               {"bin_count", s.bin_count},
               {"salient_bins", s.salient_bins},
               {"tones_per_bin", s.tones_per_bin},
               {"bins_min", s.bins_min},
               {"bins_max", s.bins_max},
               {"noise_std", s.noise_std},
               {"voigt_sigma", s.sigma()},
               {"voigt_gamma", s.gamma()},
               {"n_train", c.data.n_train},
               {"n_val", c.data.n_val},
               {"n_test", c.data.n_test}};
  j["model"] = {{"width1", c.model.width1},
                {"width2", c.model.width2},
                {"kernel", c.model.kernel}};
  j["train"] = {{"max_epochs", c.train.max_epochs},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"patience", c.train.patience}};
  j["flextime"] = {{"L", c.flextime.bands},
                   {"N", c.flextime.taps},
                   {"r", c.flextime.ratio},
                   {"iterations", c.flextime.iterations},
                   {"step_size", c.flextime.step_size}};
  j["dynamask_freq"] = {{"r", c.dynamask_freq.ratio},
                        {"W", c.dynamask_freq.window},
                        {"iterations", c.dynamask_freq.iterations},
                        {"step_size", c.dynamask_freq.step_size}};
  j["freqrise"] = {{"n_masks", c.freqrise.n_masks},
                   {"grid_size", c.freqrise.grid_size},
                   {"keep_probability", c.freqrise.keep_probability}};
  j["explain"] = {{"methods", c.explain.methods},
                  {"max_samples", c.explain.max_samples},
                  {"svg", c.explain.svg},
                  {"ig_steps", c.explain.ig_steps}};
  j["metrics"] = {{"keep_fraction", c.metrics.keep_fraction},
                  {"random_control", c.metrics.random_control},
                  {"robustness",
                   {{"samples", c.metrics.robustness_samples},
                    {"n_perturbations", c.metrics.robustness.n_perturbations},
                    {"noise_std_fraction", c.metrics.robustness.noise_std_fraction}}}};
  j["tune"] = {{"L", c.tune.bands}, {"N", c.tune.taps}, {"r", c.tune.ratios}, {"subsample", c.tune.subsample}};
  j["gibbs"] = {{"low_hz", c.gibbs.low_hz},
                {"high_hz", c.gibbs.high_hz},
                {"taps", c.gibbs.taps},
                {"sample_rate", c.gibbs.sample_rate}};
  return j;
}

}  // namespace flextime::app
