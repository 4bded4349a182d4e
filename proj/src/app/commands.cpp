// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/app/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "flextime/app/container.hpp"
#include "flextime/app/svg.hpp"
#include "flextime/error.hpp"
#include "flextime/filterbank.hpp"
#include "flextime/parallel.hpp"

namespace flextime::app {
namespace {

using nlohmann::json;

std::uint32_t u32(std::size_t n) {
  detail::require(n <= 0xffffffffULL, "container: dimension too large");
  return static_cast<std::uint32_t>(n);
}

void refuse_existing(const std::vector<fs::path>& outputs, bool force) {
  if (force) return;
  for (const auto& p : outputs) {
    if (fs::exists(p)) detail::fail("output '" + p.string() + "' already exists (pass --force to overwrite)");
  }
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) detail::fail("missing input file '" + p.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void progress(const std::string& msg) { std::clog << "[flextime] " << msg << std::endl; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sample_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", index);
  return buf;
}

json method_config(const RunConfig& cfg, const std::string& method) {
  const json all = to_json(cfg);
  if (method == "flextime" || method == "dynamask_freq" || method == "freqrise") return all.at(method);
  if (method == "ig") return {{"ig_steps", cfg.explain.ig_steps}};
  return json::object();
}

Explanation run_method(const std::string& method, const Classifier& model, const TimeSeries& ts,
                       const Filterbank* fb, const RunConfig& cfg) {
  if (method == "flextime") return flextime_explain(model, ts, *fb, std::nullopt, cfg.flextime).explanation;
  if (method == "dynamask_freq") return dynamask_freq_explain(model, ts, std::nullopt, cfg.dynamask_freq);
  if (method == "freqrise") return freqrise_explain(model, ts, std::nullopt, cfg.freqrise);
  return gradient_explain(gradient_method_from_string(method), model, ts, std::nullopt, cfg.explain.ig_steps);
}

json explanation_json(const Explanation& e, std::size_t index, int label, const json& config) {
  json j;
  j["method"] = e.method;
  j["sample"] = index;
  j["label"] = label;
  j["target_class"] = e.target_class;
  j["config"] = config;
  j["saliency"] = e.saliency;
  if (!e.channel_saliency.empty()) {
    j["channel_saliency"] = e.channel_saliency;
    j["channels"] = e.channels;
  }
  if (!e.mask.empty()) j["mask"] = e.mask;
  if (!e.attribution.empty()) j["attribution"] = e.attribution;
  if (!e.trace.objective.empty()) {
    j["trace"] = {{"objective", e.trace.objective},
                  {"distortion", e.trace.distortion},
                  {"halvings", e.trace.halvings},
                  {"stalled", e.trace.stalled},
                  {"finite_difference", e.trace.finite_difference}};
  }
  return j;
}

Explanation explanation_from_json(const json& j) {
  Explanation e;
  e.method = j.at("method").get<std::string>();
  e.target_class = j.at("target_class").get<std::size_t>();
  e.saliency = j.at("saliency").get<std::vector<double>>();
  if (j.contains("channel_saliency")) {
    e.channel_saliency = j.at("channel_saliency").get<std::vector<double>>();
    e.channels = j.at("channels").get<std::size_t>();
  }
  if (j.contains("mask")) e.mask = j.at("mask").get<std::vector<double>>();
  return e;
}

std::vector<double> random_saliency(std::uint64_t seed, std::size_t index, std::size_t K) {
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(K);
  for (double& v : s) v = u(rng);
  return s;
}

struct SampleScores {
  bool localized = false;
  LocalizationScores loc;
  double faithfulness = 0.0;
  double complexity = 0.0;
  std::optional<double> robustness;
};

struct MethodSummary {
  std::size_t n_samples = 0;
  std::size_t n_localized = 0;
  double auprc = 0.0, aup = 0.0, aur = 0.0, faithfulness = 0.0, complexity = 0.0;
  std::optional<double> robustness;
};

MethodSummary summarize(const std::vector<SampleScores>& scores) {
  MethodSummary m;
  m.n_samples = scores.size();
  double rob = 0.0;
  std::size_t n_rob = 0;
  for (const auto& s : scores) {
    m.faithfulness += s.faithfulness;
    m.complexity += s.complexity;
    if (s.localized) {
      ++m.n_localized;
      m.auprc += s.loc.auprc;
      m.aup += s.loc.aup;
      m.aur += s.loc.aur;
    }
    if (s.robustness) {
      rob += *s.robustness;
      ++n_rob;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(m.n_samples, 1));
  m.faithfulness /= n;
  m.complexity /= n;
  if (m.n_localized) {
    m.auprc /= static_cast<double>(m.n_localized);
    m.aup /= static_cast<double>(m.n_localized);
    m.aur /= static_cast<double>(m.n_localized);
  }
  if (n_rob) m.robustness = rob / static_cast<double>(n_rob);
  return m;
}

json aggregate(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  json raw = json::array();
  for (const auto& x : values) {
    raw.push_back(x ? json(*x) : json(nullptr));
    if (x) v.push_back(*x);
  }
  if (v.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"values", raw}};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  return {{"mean", mean}, {"std", sd}, {"values", raw}};
}

const char* const kMetricKeys[] = {"auprc", "aup", "aur", "faithfulness", "complexity", "robustness"};

}  // namespace

// ---------------------------------------------------------------------------
// Persistence

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) detail::fail("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    detail::fail("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void save_split(const fs::path& path, const SynthSplit& split, const SynthConfig& cfg) {
  const std::size_t n = split.samples.size();
  const std::size_t T = cfg.length, K = bin_count(cfg.length);
  std::vector<double> inputs;
  inputs.reserve(n * T);
  std::vector<std::uint8_t> labels(n), gt(n * K), bins(n * cfg.bin_count);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = split.samples[i];
    detail::require(s.ts.length == T && s.ts.channels == 1, "save_split: unexpected sample shape");
    inputs.insert(inputs.end(), s.ts.samples.begin(), s.ts.samples.end());
    labels[i] = static_cast<std::uint8_t>(s.label);
    for (std::size_t k = 0; k < K; ++k) gt[i * K + k] = s.ground_truth_freq[k] ? 1 : 0;
    for (std::size_t b : s.sampled_bins) bins[i * cfg.bin_count + b] = 1;
  }
  TensorContainer c;
  c.add(Tensor::from_doubles("inputs", {u32(n), u32(T), 1}, inputs, DType::F32));
  c.add(Tensor::from_bytes("labels", {u32(n)}, labels));
  c.add(Tensor::from_bytes("ground_truth", {u32(n), u32(K)}, gt));
  c.add(Tensor::from_bytes("sampled_bins", {u32(n), u32(cfg.bin_count)}, bins));
  const double rate = cfg.sample_rate;
  c.add(Tensor::from_doubles("sample_rate", {1}, std::span<const double>(&rate, 1), DType::F64));
  write_container(c, path);
}

LoadedSplit load_split(const fs::path& path) {
  require_file(path);
  const TensorContainer c = read_container(path);
  const Tensor& in = c.get("inputs");
  detail::require(in.dims.size() == 3, path.string() + ": inputs must be [n x T x V]");
  const std::size_t n = in.dims[0], T = in.dims[1], V = in.dims[2];
  const double rate = c.get("sample_rate").to_doubles().at(0);
  const auto values = in.to_doubles();
  const auto labels = c.get("labels").to_doubles();
  const Tensor& gt = c.get("ground_truth");
  detail::require(labels.size() == n && gt.dims.size() == 2 && gt.dims[0] == n,
                  path.string() + ": labels/ground truth do not match inputs");
  const std::size_t K = gt.dims[1];
  LoadedSplit out;
  out.inputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.inputs.emplace_back(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(i * T * V),
                                                values.begin() + static_cast<std::ptrdiff_t>((i + 1) * T * V)),
                            T, V, rate);
    out.labels.push_back(static_cast<int>(labels[i]));
    std::vector<bool> g(K);
    for (std::size_t k = 0; k < K; ++k) g[k] = gt.payload[i * K + k] != 0;
    out.ground_truth.push_back(std::move(g));
  }
  return out;
}

json spec_to_json(const ModelSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) {
    layers.push_back({{"type", to_string(l.kind)},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"channels", l.channels},
                      {"padding", l.padding}});
  }
  return {{"input_length", spec.input_length},
          {"input_channels", spec.input_channels},
          {"classes", spec.classes},
          {"layers", layers}};
}

ModelSpec spec_from_json(const json& j) {
  try {
    ModelSpec spec;
    spec.input_length = j.at("input_length").get<std::size_t>();
    spec.input_channels = j.at("input_channels").get<std::size_t>();
    spec.classes = j.at("classes").get<std::size_t>();
    for (const auto& l : j.at("layers")) {
      LayerSpec layer;
      layer.kind = layer_kind_from_string(l.at("type").get<std::string>());
      layer.kernel = l.at("kernel").get<std::size_t>();
      layer.stride = l.at("stride").get<std::size_t>();
      layer.channels = l.at("channels").get<std::size_t>();
      layer.padding = l.at("padding").get<std::size_t>();
      spec.layers.push_back(layer);
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    detail::fail(std::string("model architecture: ") + e.what());
  }
}

void save_model(const fs::path& path, const ModelSpec& spec, const ModelParams& params, const json* training_log) {
  params.validate(spec);
  TensorContainer c;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != LayerKind::Conv1d) continue;
    const std::size_t c_in = params.weights[i].size() / (l.channels * l.kernel);
    // Weights are small; keep them in double so the saved model is the trained one.
    c.add(Tensor::from_doubles("layer" + std::to_string(i) + ".weight", {u32(l.channels), u32(c_in), u32(l.kernel)},
                               params.weights[i], DType::F64));
    c.add(Tensor::from_doubles("layer" + std::to_string(i) + ".bias", {u32(l.channels)}, params.biases[i],
                               DType::F64));
  }
  write_container(c, path);
  write_json(fs::path(path.string() + ".json"), spec_to_json(spec));
  if (training_log) write_json(fs::path(path.string() + ".log.json"), *training_log);
}

LoadedModel load_model(const fs::path& path) {
  require_file(path);
  const fs::path arch = path.string() + ".json";
  require_file(arch);
  LoadedModel m;
  m.spec = spec_from_json(read_json(arch));
  m.params.weights.resize(m.spec.layers.size());
  m.params.biases.resize(m.spec.layers.size());
  const TensorContainer c = read_container(path);
  for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
    if (m.spec.layers[i].kind != LayerKind::Conv1d) continue;
    m.params.weights[i] = c.get("layer" + std::to_string(i) + ".weight").to_doubles();
    m.params.biases[i] = c.get("layer" + std::to_string(i) + ".bias").to_doubles();
  }
  m.params.validate(m.spec);
  return m;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen(const RunConfig& cfg, const fs::path& out_dir, bool force) {
  const std::vector<fs::path> outputs{out_dir / "train.flxt", out_dir / "val.flxt", out_dir / "test.flxt",
                                      out_dir / "manifest.json"};
  refuse_existing(outputs, force);
  fs::create_directories(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const SynthDataset ds =
      generate_dataset(cfg.data.synth, cfg.data.n_train, cfg.data.n_val, cfg.data.n_test, cfg.workers);
  save_split(outputs[0], ds.train, cfg.data.synth);
  save_split(outputs[1], ds.val, cfg.data.synth);
  save_split(outputs[2], ds.test, cfg.data.synth);
  const std::size_t classes = cfg.data.synth.class_count();
  json manifest = {{"data", to_json(cfg).at("data")},
                   {"seed", cfg.seed},
                   {"splits",
                    {{"train", {{"file", "train.flxt"}, {"size", ds.train.samples.size()},
                                {"class_counts", ds.train.class_counts(classes)}}},
                     {"val", {{"file", "val.flxt"}, {"size", ds.val.samples.size()},
                              {"class_counts", ds.val.class_counts(classes)}}},
                     {"test", {{"file", "test.flxt"}, {"size", ds.test.samples.size()},
                               {"class_counts", ds.test.class_counts(classes)}}}}}};
  write_json(outputs[3], manifest);
  progress("generated " + std::to_string(ds.train.samples.size()) + "/" + std::to_string(ds.val.samples.size()) + "/" +
           std::to_string(ds.test.samples.size()) + " samples in " + shortest(std::round(seconds_since(t0) * 10) / 10) +
           " s");
}

json cmd_train(const RunConfig& cfg, const fs::path& data_dir, const fs::path& model_out, bool force) {
  refuse_existing({model_out, model_out.string() + ".json", model_out.string() + ".log.json"}, force);
  const LoadedSplit train_split = load_split(data_dir / "train.flxt");
  const LoadedSplit val_split = load_split(data_dir / "val.flxt");
  const ModelSpec spec = cfg.model_spec();
  detail::require(!train_split.inputs.empty() && train_split.inputs.front().length == spec.input_length,
                  "train: data length does not match the configured model input");
  if (model_out.has_parent_path()) fs::create_directories(model_out.parent_path());

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train(spec, train_split.inputs, train_split.labels, val_split.inputs, val_split.labels,
                             cfg.train, [&](const EpochRecord& r) {
                               progress("epoch " + std::to_string(r.epoch) + " loss " + shortest(r.train_loss) +
                                        " val_acc " + shortest(r.val_accuracy) + (r.best ? " *" : ""));
                             });
  json epochs = json::array();
  for (const auto& r : result.log) {
    epochs.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_accuracy", r.val_accuracy},
                      {"best", r.best}});
  }
  json log = {{"epochs", epochs},
              {"best_epoch", result.best_epoch},
              {"best_val_accuracy", result.best_val_accuracy},
              {"train", to_json(cfg).at("train")},
              {"seed", cfg.seed},
              {"parameter_count", result.params.parameter_count()}};
  if (fs::exists(data_dir / "test.flxt")) {
    const LoadedSplit test = load_split(data_dir / "test.flxt");
    log["test_accuracy"] = accuracy(spec, result.params, test.inputs, test.labels, cfg.workers);
    progress("test accuracy " + shortest(log["test_accuracy"].get<double>()));
  }
  save_model(model_out, spec, result.params, &log);
  progress("trained in " + shortest(std::round(seconds_since(t0))) + " s");
  return log;
}

void cmd_explain(const RunConfig& cfg, const std::vector<std::string>& methods, const fs::path& model_path,
                 const fs::path& data_dir, const fs::path& out_dir, bool force) {
  detail::require(!methods.empty(), "explain: no methods given");
  for (const auto& m : methods) {
    detail::require(m == "flextime" || m == "dynamask_freq" || m == "freqrise" || m == "saliency" || m == "gxi" ||
                        m == "ig",
                    "explain: unknown method '" + m + "'");
  }
  std::vector<fs::path> outputs{out_dir / "manifest.json"};
  for (const auto& m : methods) outputs.push_back(out_dir / m);
  refuse_existing(outputs, force);
  const LoadedModel lm = load_model(model_path);
  const CnnClassifier model(lm.spec, lm.params);
  const LoadedSplit test = load_split(data_dir / "test.flxt");
  const std::size_t n = cfg.explain.max_samples ? std::min(cfg.explain.max_samples, test.inputs.size())
                                                : test.inputs.size();
  fs::create_directories(out_dir);
  const double rate = test.inputs.front().sample_rate;
  const std::size_t T = test.inputs.front().length;
  std::vector<double> freqs(bin_count(T));
  for (std::size_t k = 0; k < freqs.size(); ++k) freqs[k] = bin_frequency(k, T, rate);

  std::optional<Filterbank> fb;
  if (std::find(methods.begin(), methods.end(), "flextime") != methods.end()) {
    fb = design_filterbank(cfg.flextime.bands, cfg.flextime.taps, rate);
  }
  for (const auto& method : methods) {
    const fs::path dir = out_dir / method;
    if (force && fs::exists(dir)) fs::remove_all(dir);
    fs::create_directories(dir);
    const json config = method_config(cfg, method);
    std::vector<double> durations(n);
    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(n, cfg.workers, [&](std::size_t i) {
      const auto s0 = std::chrono::steady_clock::now();
      const Explanation e = run_method(method, model, test.inputs[i], fb ? &*fb : nullptr, cfg);
      durations[i] = seconds_since(s0);
      e.validate();
      write_json(dir / (sample_name(i) + ".json"), explanation_json(e, i, test.labels[i], config));
      if (cfg.explain.svg) {
        const auto spec = rfft(test.inputs[i].channel(0));
        std::vector<double> mag(spec.size());
        for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
        PlotFrame frame{method + " explanation, sample " + std::to_string(i) + " (class " +
                            std::to_string(e.target_class) + ")",
                        "frequency [Hz]", "normalized magnitude"};
        write_text(dir / (sample_name(i) + ".svg"),
                   spectrum_heatmap(frame, freqs, e.saliency, mag, test.ground_truth[i]));
      }
    });
    json timing = {{"method", method}, {"workers", cfg.workers}, {"total_seconds", seconds_since(t0)},
                   {"per_sample_seconds", durations}};
    write_json(dir / "timing.json", timing);
    progress("explained " + std::to_string(n) + " samples with " + method + " in " +
             shortest(std::round(seconds_since(t0))) + " s");
  }
  json echo = to_json(cfg);
  echo.erase("workers");
  json manifest = {{"methods", methods}, {"samples", n}, {"model", model_path.filename().string()},
                   {"config", echo}};
  write_json(out_dir / "manifest.json", manifest);
}

json cmd_metrics(const RunConfig& cfg, const std::vector<MetricRun>& runs, const fs::path& out_dir, bool force) {
  detail::require(!runs.empty(), "metrics: no runs given");
  refuse_existing({out_dir / "metrics.json", out_dir / "metrics.csv"}, force);
  for (const auto& r : runs) {
    require_file(r.model);
    require_file(r.data / "test.flxt");
    require_file(r.explanations / "manifest.json");
  }

  std::vector<std::string> methods;
  std::map<std::string, std::vector<MethodSummary>> per_method;
  for (std::size_t run = 0; run < runs.size(); ++run) {
    const MetricRun& r = runs[run];
    const LoadedModel lm = load_model(r.model);
    const CnnClassifier model(lm.spec, lm.params);
    const LoadedSplit test = load_split(r.data / "test.flxt");
    const json manifest = read_json(r.explanations / "manifest.json");
    std::vector<std::string> run_methods = manifest.at("methods").get<std::vector<std::string>>();
    const std::size_t n = manifest.at("samples").get<std::size_t>();
    detail::require(n <= test.inputs.size(), "metrics: explanations cover more samples than the test split");
    if (cfg.metrics.random_control) run_methods.push_back("random");
    if (run == 0) {
      methods = run_methods;
    } else {
      detail::require(run_methods == methods, "metrics: runs explain different method sets");
    }
    const double rate = test.inputs.front().sample_rate;
    std::optional<Filterbank> fb;
    for (const auto& method : run_methods) {
      if (method == "flextime" && cfg.metrics.robustness_samples > 0) {
        fb = design_filterbank(cfg.flextime.bands, cfg.flextime.taps, rate);
      }
      std::vector<SampleScores> scores(n);
      parallel_for(n, cfg.workers, [&](std::size_t i) {
        const TimeSeries& ts = test.inputs[i];
        Explanation e;
        if (method == "random") {
          e.method = "random";
          e.saliency = random_saliency(cfg.seed, i, bin_count(ts.length));
        } else {
          e = explanation_from_json(read_json(r.explanations / method / (sample_name(i) + ".json")));
        }
        SampleScores& s = scores[i];
        const auto& gt = test.ground_truth[i];
        if (std::find(gt.begin(), gt.end(), true) != gt.end()) {
          s.localized = true;
          s.loc = localization(e, gt);
        }
        s.faithfulness = faithfulness(model, ts, e, static_cast<std::size_t>(test.labels[i]), cfg.metrics.keep_fraction);
        s.complexity = complexity(e);
        if (method != "random" && i < cfg.metrics.robustness_samples) {
          RobustnessConfig rc = cfg.metrics.robustness;
          rc.seed = cfg.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
          s.robustness = robustness_max_sensitivity(
              [&](const TimeSeries& x) { return run_method(method, model, x, fb ? &*fb : nullptr, cfg); }, ts, rc);
        }
      });
      per_method[method].push_back(summarize(scores));
    }
  }

  json report;
  report["runs"] = runs.size();
  report["keep_fraction"] = cfg.metrics.keep_fraction;
  report["method_order"] = methods;
  json by_method = json::object();
  for (const auto& method : methods) {
    const auto& sums = per_method[method];
    std::map<std::string, std::vector<std::optional<double>>> cols;
    json counts = json::array(), localized = json::array();
    for (const auto& s : sums) {
      cols["auprc"].push_back(s.auprc);
      cols["aup"].push_back(s.aup);
      cols["aur"].push_back(s.aur);
      cols["faithfulness"].push_back(s.faithfulness);
      cols["complexity"].push_back(s.complexity);
      cols["robustness"].push_back(s.robustness);
      counts.push_back(s.n_samples);
      localized.push_back(s.n_localized);
    }
    json m;
    for (const char* key : kMetricKeys) m[key] = aggregate(cols[key]);
    m["n_samples"] = counts;
    m["n_localized"] = localized;
    by_method[method] = m;
  }
  report["methods"] = by_method;
  fs::create_directories(out_dir);
  write_json(out_dir / "metrics.json", report);
  write_text(out_dir / "metrics.csv", metrics_csv(report));
  return report;
}

std::string metrics_csv(const json& report) {
  std::string csv = "method";
  for (const char* key : kMetricKeys) csv += std::string(",") + key + "_mean," + key + "_std";
  csv += ",runs\n";
  for (const auto& method : report.at("method_order")) {
    const json& m = report.at("methods").at(method.get<std::string>());
    csv += method.get<std::string>();
    for (const char* key : kMetricKeys) {
      for (const char* stat : {"mean", "std"}) {
        const json& v = m.at(key).at(stat);
        csv += ",";
        if (!v.is_null()) csv += shortest(v.get<double>());
      }
    }
    csv += "," + std::to_string(report.at("runs").get<std::size_t>()) + "\n";
  }
  return csv;
}

json cmd_tune(const RunConfig& cfg, const std::string& method, const fs::path& model_path, const fs::path& data_dir,
              const fs::path& out_path, bool force) {
  const TunableMethod which = tunable_method_from_string(method);
  refuse_existing({out_path}, force);
  const LoadedModel lm = load_model(model_path);
  const CnnClassifier model(lm.spec, lm.params);
  const LoadedSplit val = load_split(data_dir / "val.flxt");
  const auto t0 = std::chrono::steady_clock::now();
  const TuneResult result =
      tune_hyperparameters(which, model, val.inputs, val.labels, cfg.tune, cfg.flextime, cfg.dynamask_freq, cfg.workers);
  const bool flex = which == TunableMethod::FlexTime;
  json grid = json::array();
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    json row = {{"r", c.ratio}, {"faithfulness", result.scores[i].faithfulness},
                {"complexity", result.scores[i].complexity}};
    if (flex) {
      row["L"] = c.bands;
      row["N"] = c.taps;
    }
    grid.push_back(row);
  }
  json out = {{"method", method}, {"r", result.best.ratio}, {"grid", grid},
              {"subsample", std::min(cfg.tune.subsample, val.inputs.size())}};
  if (flex) {
    out["L"] = result.best.bands;
    out["N"] = result.best.taps;
  } else {
    out["W"] = cfg.dynamask_freq.window;
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_json(out_path, out);
  progress("tuned " + method + " over " + std::to_string(result.candidates.size()) + " candidates in " +
           shortest(std::round(seconds_since(t0))) + " s");
  return out;
}

json cmd_demo_gibbs(const RunConfig& cfg, const fs::path& out_dir, bool force) {
  const GibbsSettings& g = cfg.gibbs;
  const std::vector<fs::path> outputs{out_dir / "gibbs.json", out_dir / "gibbs_time.svg",
                                      out_dir / "gibbs_response.svg"};
  refuse_existing(outputs, force);
  const std::size_t taps = odd_tap_count(g.taps);
  const StopbandComparison cmp = stopband_comparison(taps, g.low_hz, g.high_hz, g.sample_rate);
  const FirFilter fir = design_bandpass(g.low_hz, g.high_hz, taps, g.sample_rate);
  const FirFilter ideal = design_truncated_ideal(g.low_hz, g.high_hz, taps, g.sample_rate);
  fs::create_directories(out_dir);

  // Test signal: an in-band harmonic, a broadband chirp and a decaying transient.
  const std::size_t T = 2 * taps;
  const double fs_ = g.sample_rate, duration = static_cast<double>(T) / fs_;
  const double centre = 0.5 * (g.low_hz + g.high_hz);
  const double pi = std::numbers::pi;
  std::vector<double> x(T), t_axis(T);
  for (std::size_t n = 0; n < T; ++n) {
    const double t = static_cast<double>(n) / fs_;
    t_axis[n] = static_cast<double>(n);
    const double f0 = 0.25 * centre, f1 = 6.0 * centre;
    const double chirp = std::sin(2 * pi * (f0 * t + 0.5 * (f1 - f0) / duration * t * t));
    const double t_on = 0.2 * duration;
    const double burst = t >= t_on ? std::exp(-(t - t_on) * 8.0) * std::sin(2 * pi * 2.3 * centre * (t - t_on)) : 0.0;
    x[n] = std::sin(2 * pi * centre * t) + 0.7 * chirp + 0.8 * burst;
  }
  const std::vector<double> y_fir = convolve_same(x, fir.taps);
  auto X = rfft(x);
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double f = bin_frequency(k, T, fs_);
    if (f < g.low_hz || f > g.high_hz) X[k] = 0.0;
  }
  const std::vector<double> y_dft = irfft(X, T);

  const std::size_t stride = std::max<std::size_t>(1, T / 4000);
  auto thin = [&](const std::vector<double>& v) {
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
    return out;
  };
  const auto tt = thin(t_axis);
  std::vector<double> x_scaled = thin(x);
  for (double& v : x_scaled) v *= 0.25;
  write_text(outputs[1], line_plot({"Band " + shortest(g.low_hz) + "-" + shortest(g.high_hz) + " Hz: DFT zeroing vs FIR",
                                    "sample", "amplitude"},
                                   {{"input (x0.25)", tt, x_scaled, "#bbbbbb"},
                                    {"DFT zeroing", tt, thin(y_dft), "#d62728"},
                                    {"Hamming FIR", tt, thin(y_fir), "#1f77b4"}}));

  const std::size_t points = 65537;
  const auto h_fir = dense_magnitude_response(fir.taps, points);
  const auto h_ideal = dense_magnitude_response(ideal.taps, points);
  const double f_max = std::min(g.sample_rate / 2.0, 4.0 * g.high_hz);
  std::vector<double> f, db_fir, db_ideal;
  for (std::size_t i = 0; i < points; ++i) {
    const double freq = g.sample_rate / 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    if (freq > f_max) break;
    f.push_back(freq);
    db_fir.push_back(std::max(-140.0, 20.0 * std::log10(std::max(h_fir[i], 1e-12))));
    db_ideal.push_back(std::max(-140.0, 20.0 * std::log10(std::max(h_ideal[i], 1e-12))));
  }
  write_text(outputs[2], line_plot({"Magnitude response, " + std::to_string(taps) + " taps", "frequency [Hz]",
                                    "gain [dB]"},
                                   {{"DFT zeroing", f, db_ideal, "#d62728"}, {"Hamming FIR", f, db_fir, "#1f77b4"}}));

  json report = {{"band_hz", {g.low_hz, g.high_hz}},
                 {"taps", taps},
                 {"sample_rate", g.sample_rate},
                 {"fir_attenuation_db", cmp.fir_attenuation_db},
                 {"dft_zeroing_attenuation_db", cmp.dft_zeroing_attenuation_db},
                 {"fir_guard_hz", cmp.fir_guard_hz},
                 {"dft_guard_hz", cmp.dft_guard_hz},
                 {"fir_better", cmp.fir_attenuation_db > cmp.dft_zeroing_attenuation_db}};
  write_json(outputs[0], report);
  return report;
}

}  // namespace flextime::app
