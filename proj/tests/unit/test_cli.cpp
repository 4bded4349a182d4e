// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "flextime/app/commands.hpp"
#include "flextime/app/config.hpp"
#include "flextime/app/container.hpp"
#include "flextime/app/svg.hpp"
#include "flextime/error.hpp"
#include "flextime/signal.hpp"

using namespace flextime;
using namespace flextime::app;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("flextime_cli_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Minimal XML well-formedness checker: balanced tags, quoted attributes, valid entities, one root.
bool valid_entity(const std::string& s, std::size_t amp) {
  const auto semi = s.find(';', amp);
  if (semi == std::string::npos) return false;
  const std::string ent = s.substr(amp + 1, semi - amp - 1);
  if (ent == "amp" || ent == "lt" || ent == "gt" || ent == "quot" || ent == "apos") return true;
  if (ent.size() >= 2 && ent[0] == '#') {
    const bool hex = ent[1] == 'x';
    const std::string digits = ent.substr(hex ? 2 : 1);
    if (digits.empty()) return false;
    for (char c : digits) {
      if (!(hex ? std::isxdigit(static_cast<unsigned char>(c)) : std::isdigit(static_cast<unsigned char>(c)))) {
        return false;
      }
    }
    return true;
  }
  return false;
}

bool text_ok(const std::string& s, std::size_t a, std::size_t b) {
  for (std::size_t i = a; i < b; ++i) {
    if (s[i] == '<') return false;
    if (s[i] == '&' && !valid_entity(s, i)) return false;
  }
  return true;
}

bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.'; }

std::string well_formed_error(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0, roots = 0;
  while (i < s.size()) {
    const auto lt = s.find('<', i);
    const std::size_t text_end = lt == std::string::npos ? s.size() : lt;
    if (!text_ok(s, i, text_end)) return "bad character data near " + std::to_string(i);
    if (stack.empty()) {
      for (std::size_t k = i; k < text_end; ++k) {
        if (!std::isspace(static_cast<unsigned char>(s[k]))) return "text outside the root element";
      }
    }
    if (lt == std::string::npos) break;
    if (s.compare(lt, 4, "<!--") == 0) {
      const auto end = s.find("-->", lt + 4);
      if (end == std::string::npos) return "unterminated comment";
      i = end + 3;
      continue;
    }
    if (s.compare(lt, 2, "<?") == 0) {
      const auto end = s.find("?>", lt + 2);
      if (end == std::string::npos) return "unterminated processing instruction";
      i = end + 2;
      continue;
    }
    std::size_t p = lt + 1;
    const bool closing = p < s.size() && s[p] == '/';
    if (closing) ++p;
    const std::size_t name_start = p;
    while (p < s.size() && is_name_char(s[p])) ++p;
    const std::string name = s.substr(name_start, p - name_start);
    if (name.empty()) return "empty tag name at " + std::to_string(lt);
    if (closing) {
      while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
      if (p >= s.size() || s[p] != '>') return "malformed closing tag " + name;
      if (stack.empty() || stack.back() != name) return "mismatched closing tag " + name;
      stack.pop_back();
      i = p + 1;
      continue;
    }
    std::vector<std::string> attrs;
    while (true) {
      const std::size_t ws = p;
      while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
      if (p >= s.size()) return "unterminated tag " + name;
      if (s[p] == '>' || s.compare(p, 2, "/>") == 0) break;
      if (p == ws) return "missing space before attribute in " + name;
      const std::size_t a = p;
      while (p < s.size() && is_name_char(s[p])) ++p;
      const std::string attr = s.substr(a, p - a);
      if (attr.empty() || p >= s.size() || s[p] != '=') return "malformed attribute in " + name;
      for (const auto& seen : attrs) {
        if (seen == attr) return "duplicate attribute " + attr;
      }
      attrs.push_back(attr);
      ++p;
      if (p >= s.size() || (s[p] != '"' && s[p] != '\'')) return "unquoted attribute " + attr;
      const char q = s[p];
      const auto end = s.find(q, p + 1);
      if (end == std::string::npos || !text_ok(s, p + 1, end)) return "bad attribute value " + attr;
      p = end + 1;
    }
    if (stack.empty()) ++roots;
    if (s[p] == '>') {
      stack.push_back(name);
      i = p + 1;
    } else {
      i = p + 2;
    }
  }
  if (!stack.empty()) return "unclosed element " + stack.back();
  if (roots != 1) return "expected one root element, found " + std::to_string(roots);
  return "";
}

// Small but complete pipeline configuration.
json tiny_config() {
  return json::parse(R"({
    "seed": 7,
    "workers": 1,
    "data": {"length": 256, "sample_rate": 256.0, "n_train": 96, "n_val": 32, "n_test": 32},
    "model": {"width1": 4, "width2": 4, "kernel": 5},
    "train": {"max_epochs": 3, "learning_rate": 0.003, "batch_size": 16, "patience": 5},
    "flextime": {"L": 8, "N": 33, "r": 0.1, "iterations": 15},
    "dynamask_freq": {"iterations": 15},
    "freqrise": {"n_masks": 64},
    "explain": {"methods": ["flextime", "saliency"], "max_samples": 6},
    "metrics": {"robustness": {"samples": 0}},
    "tune": {"L": [8], "N": [33], "r": [0.1], "subsample": 4}
  })");
}

RunConfig tiny(std::size_t workers = 1) {
  json j = tiny_config();
  j["workers"] = workers;
  return parse_config(j);
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" + FLEXTIME_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Pipeline {
  TempDir dir;
  RunConfig cfg = tiny();
  fs::path data = dir / "data";
  fs::path model = dir / "model" / "cnn.flxt";
  fs::path expl = dir / "expl";

  Pipeline() {
    cmd_gen(cfg, data, false);
    cmd_train(cfg, data, model, false);
    cmd_explain(cfg, cfg.explain.methods, model, data, expl, false);
  }
};

Pipeline& shared_pipeline() {
  static Pipeline p;
  return p;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("container: byte layout matches the format definition") {
  TensorContainer c;
  const std::vector<double> v{1.0, -2.5};
  c.add(Tensor::from_doubles("ab", {2}, v, DType::F32));
  const auto bytes = encode(c);
  std::vector<std::uint8_t> expected{'F', 'L', 'X', 'T', 1, 0, 1, 0, 2, 0, 'a', 'b', 0, 1, 2, 0, 0, 0};
  for (float f : {1.0f, -2.5f}) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) expected.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  CHECK(bytes == expected);
}

TEST_CASE("container: write then read reproduces tensors bitwise") {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1e3);
  std::vector<double> f64(3 * 5 * 2), f32(17);
  for (double& x : f64) x = n(rng);
  for (double& x : f32) x = n(rng);
  f64[0] = std::numeric_limits<double>::denorm_min();
  f64[1] = -0.0;
  std::vector<std::uint8_t> u8{0, 1, 255, 7};

  TensorContainer c;
  c.add(Tensor::from_doubles("weights", {3, 5, 2}, f64, DType::F64));
  c.add(Tensor::from_doubles("inputs", {17}, f32, DType::F32));
  c.add(Tensor::from_bytes("labels", {2, 2}, u8));
  c.add(Tensor::from_doubles("scalar", {}, std::vector<double>{42.0}, DType::F64));
  write_container(c, dir / "x.flxt");
  const TensorContainer back = read_container(dir / "x.flxt");

  REQUIRE(back.tensors.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.tensors[i].name == c.tensors[i].name);
    CHECK(back.tensors[i].dtype == c.tensors[i].dtype);
    CHECK(back.tensors[i].dims == c.tensors[i].dims);
    CHECK(back.tensors[i].payload == c.tensors[i].payload);
  }
  const auto w = back.get("weights").to_doubles();
  for (std::size_t i = 0; i < f64.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(w[i]) == std::bit_cast<std::uint64_t>(f64[i]));
  const auto x = back.get("inputs").to_doubles();
  for (std::size_t i = 0; i < f32.size(); ++i) CHECK(x[i] == static_cast<double>(static_cast<float>(f32[i])));
  CHECK(back.get("scalar").to_doubles() == std::vector<double>{42.0});
  CHECK(encode(back) == encode(c));
}

TEST_CASE("container: malformed input is rejected") {
  TensorContainer c;
  c.add(Tensor::from_bytes("a", {3}, std::vector<std::uint8_t>{1, 2, 3}));
  const auto good = encode(c);

  SUBCASE("bad magic") {
    auto b = good;
    b[0] = 'X';
    CHECK_THROWS_AS(decode(b), ValidationError);
  }
  SUBCASE("unsupported version") {
    auto b = good;
    b[4] = 9;
    CHECK_THROWS_AS(decode(b), ValidationError);
  }
  SUBCASE("truncated payload") {
    for (std::size_t cut = 0; cut < good.size(); ++cut) {
      CHECK_THROWS_AS(decode(std::span(good).first(cut)), ValidationError);
    }
  }
  SUBCASE("trailing bytes") {
    auto b = good;
    b.push_back(0);
    CHECK_THROWS_AS(decode(b), ValidationError);
  }
  SUBCASE("unknown dtype") {
    auto b = good;
    b[4 + 2 + 2 + 2 + 1] = 3;
    CHECK_THROWS_AS(decode(b), ValidationError);
  }
  SUBCASE("duplicate names") {
    TensorContainer d;
    d.add(Tensor::from_bytes("a", {1}, std::vector<std::uint8_t>{1}));
    CHECK_THROWS_AS(d.add(Tensor::from_bytes("a", {1}, std::vector<std::uint8_t>{2})), ValidationError);
    auto b = encode(d);
    // Append a second tensor with the same name by hand and bump the count.
    const std::vector<std::uint8_t> dup{1, 0, 'a', 2, 1, 1, 0, 0, 0, 5};
    b.insert(b.end(), dup.begin(), dup.end());
    b[6] = 2;
    CHECK_THROWS_AS(decode(b), ValidationError);
  }
  SUBCASE("dims that disagree with values") {
    CHECK_THROWS_AS(Tensor::from_doubles("w", {2, 2}, std::vector<double>{1, 2, 3}, DType::F32), ValidationError);
    CHECK_THROWS_AS(Tensor::from_doubles("w", {1}, std::vector<double>{256}, DType::U8), ValidationError);
  }
}

TEST_CASE("config: defaults mirror the experimental setup") {
  const RunConfig cfg = parse_config(json::object());
  CHECK(cfg.data.n_train == 10000);
  CHECK(cfg.data.n_test == 992);
  CHECK(cfg.data.synth.length == 2000);
  CHECK(cfg.data.synth.class_count() == 16);
  CHECK(cfg.data.n_test % cfg.data.synth.class_count() == 0);
}

TEST_CASE("config: to_json round trips") {
  const RunConfig cfg = tiny(3);
  const json j = to_json(cfg);
  CHECK(to_json(parse_config(j)) == j);
}

TEST_CASE("config: schema errors name every offending path") {
  json j = tiny_config();
  j["data"]["lenght"] = 100;
  j["train"]["learning_rate"] = "fast";
  j["flextime"]["L"] = -3;
  j["explain"]["methods"] = {"flextime", 5};
  j["bogus"] = true;
  try {
    parse_config(j);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("$.data.lenght: unknown key") != std::string::npos);
    CHECK(msg.find("$.train.learning_rate: expected a number") != std::string::npos);
    CHECK(msg.find("$.flextime.L: expected a non-negative integer") != std::string::npos);
    CHECK(msg.find("$.explain.methods[1]: expected a string") != std::string::npos);
    CHECK(msg.find("$.bogus: unknown key") != std::string::npos);
  }
}

TEST_CASE("config: semantic errors") {
  auto bad = [](const std::function<void(json&)>& edit) {
    json j = tiny_config();
    edit(j);
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  };
  bad([](json& j) { j["workers"] = 0; });
  bad([](json& j) { j["model"]["kernel"] = 4; });
  bad([](json& j) { j["flextime"]["r"] = 1.5; });
  bad([](json& j) { j["explain"]["methods"] = {"lime"}; });
  bad([](json& j) { j["metrics"]["keep_fraction"] = 0.0; });
  bad([](json& j) { j["gibbs"]["high_hz"] = 5000.0; });
  bad([](json& j) { j["data"]["salient_bins"] = {1, 2}; });
  bad([](json& j) { j["tune"]["L"] = json::array(); });
  bad([](json& j) { j = json::array(); });
}

TEST_CASE("gen: deterministic files and split sizes") {
  TempDir dir;
  const RunConfig cfg = tiny();
  cmd_gen(cfg, dir / "a", false);
  cmd_gen(tiny(3), dir / "b", false);
  for (const char* f : {"train.flxt", "val.flxt", "test.flxt", "manifest.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const json m = read_json(dir / "a" / "manifest.json");
  CHECK(m["splits"]["train"]["size"] == 96);
  CHECK(m["splits"]["test"]["size"] == 32);
  for (const auto& count : m["splits"]["test"]["class_counts"]) CHECK(count == 2);

  const LoadedSplit test = load_split(dir / "a" / "test.flxt");
  REQUIRE(test.inputs.size() == 32);
  CHECK(test.inputs[0].length == 256);
  CHECK(test.ground_truth[0].size() == bin_count(256));

  SUBCASE("existing outputs are refused without force") {
    CHECK_THROWS_AS(cmd_gen(cfg, dir / "a", false), ValidationError);
    CHECK_NOTHROW(cmd_gen(cfg, dir / "a", true));
  }
}

TEST_CASE("train: log marks the best epoch and rerun needs force") {
  Pipeline& p = shared_pipeline();
  const json log = read_json(p.model.string() + ".log.json");
  const auto& epochs = log["epochs"];
  REQUIRE(!epochs.empty());
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& e : epochs) {
    if (e["val_accuracy"].get<double>() > best) {
      best = e["val_accuracy"].get<double>();
      best_epoch = e["epoch"].get<std::size_t>();
    }
  }
  CHECK(log["best_epoch"] == best_epoch);
  CHECK(log["best_val_accuracy"].get<double>() == best);
  for (const auto& e : epochs) {
    if (e["epoch"] == best_epoch) CHECK(e["best"] == true);
  }
  CHECK(log.contains("test_accuracy"));

  const LoadedModel m = load_model(p.model);
  CHECK(spec_to_json(m.spec) == spec_to_json(p.cfg.model_spec()));
  CHECK_THROWS_AS(cmd_train(p.cfg, p.data, p.model, false), ValidationError);
}

TEST_CASE("explain: schema of a FLEXtime explanation") {
  Pipeline& p = shared_pipeline();
  const json e = read_json(p.expl / "flextime" / "sample_00000.json");
  CHECK(e["method"] == "flextime");
  CHECK(e["mask"].size() == 8);
  CHECK(e["saliency"].size() == bin_count(256));
  CHECK(e["config"]["L"] == 8);
  CHECK(e["config"]["N"] == 33);
  CHECK(e["config"]["r"] == 0.1);
  CHECK(e.contains("trace"));
  for (const auto& m : e["mask"]) {
    CHECK(m.get<double>() >= 0.0);
    CHECK(m.get<double>() <= 1.0);
  }
  const json g = read_json(p.expl / "saliency" / "sample_00005.json");
  CHECK(g["saliency"].size() == bin_count(256));
  CHECK(!g.contains("mask"));
  CHECK(!fs::exists(p.expl / "saliency" / "sample_00006.json"));
}

TEST_CASE("explain: SVG heatmaps are well-formed XML with a frequency axis") {
  Pipeline& p = shared_pipeline();
  for (const char* method : {"flextime", "saliency"}) {
    const std::string svg = slurp(p.expl / method / "sample_00001.svg");
    CHECK(well_formed_error(svg) == "");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("frequency [Hz]") != std::string::npos);
  }
}

TEST_CASE("svg: checker rejects broken documents and escaping keeps titles valid") {
  CHECK(well_formed_error("<svg><g></svg>") != "");
  CHECK(well_formed_error("<svg a=1></svg>") != "");
  CHECK(well_formed_error("<svg>a & b</svg>") != "");
  CHECK(well_formed_error("<svg/><svg/>") != "");
  CHECK(well_formed_error("<?xml version=\"1.0\"?><svg x=\"&lt;\">ok<!-- c --></svg>") == "");
  const std::vector<double> x{0, 1, 2}, y{1, 0, 2};
  const std::string svg = line_plot({"a < b & \"c\"", "x", "y"}, {{"s<1>", x, y}});
  CHECK(well_formed_error(svg) == "");
  CHECK(xml_escape("<&>\"'") == "&lt;&amp;&gt;&quot;&apos;");
}

TEST_CASE("explain: outputs do not depend on the worker count") {
  Pipeline& p = shared_pipeline();
  const fs::path other = p.dir / "expl_w4";
  cmd_explain(tiny(4), p.cfg.explain.methods, p.model, p.data, other, false);
  CHECK(slurp(p.expl / "manifest.json") == slurp(other / "manifest.json"));
  for (const char* method : {"flextime", "saliency"}) {
    for (int i = 0; i < 6; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%05d", i);
      CHECK(slurp(p.expl / method / (std::string(name) + ".json")) == slurp(other / method / (std::string(name) + ".json")));
      CHECK(slurp(p.expl / method / (std::string(name) + ".svg")) == slurp(other / method / (std::string(name) + ".svg")));
    }
  }
}

TEST_CASE("metrics: JSON and CSV agree and runs aggregate to mean and std") {
  Pipeline& p = shared_pipeline();
  RunConfig cfg = p.cfg;
  // A second split from another seed, explained with the same model.
  json j = tiny_config();
  j["seed"] = 8;
  const RunConfig cfg2 = parse_config(j);
  const fs::path data2 = p.dir / "data2", expl2 = p.dir / "expl2";
  cmd_gen(cfg2, data2, false);
  cmd_explain(cfg, cfg.explain.methods, p.model, data2, expl2, false);

  const json one = cmd_metrics(cfg, {{p.model, p.data, p.expl}}, p.dir / "m1", false);
  const json other = cmd_metrics(cfg, {{p.model, data2, expl2}}, p.dir / "m2", false);
  const json both = cmd_metrics(cfg, {{p.model, p.data, p.expl}, {p.model, data2, expl2}}, p.dir / "m12", false);

  CHECK(one["method_order"] == json({"flextime", "saliency", "random"}));
  for (const auto& row : {"auprc", "aup", "aur"}) CHECK(one["methods"]["flextime"][row]["mean"].is_number());

  for (const std::string method : {"flextime", "saliency", "random"}) {
    for (const char* key : {"auprc", "aup", "aur", "faithfulness", "complexity"}) {
      const double a = one["methods"][method][key]["mean"].get<double>();
      const double b = other["methods"][method][key]["mean"].get<double>();
      const json& agg = both["methods"][method][key];
      CHECK(agg["values"] == json({a, b}));
      CHECK(agg["mean"].get<double>() == doctest::Approx((a + b) / 2).epsilon(1e-12));
      CHECK(agg["std"].get<double>() == doctest::Approx(std::abs(a - b) / std::sqrt(2.0)).epsilon(1e-9));
      CHECK(one["methods"][method][key]["std"].get<double>() == 0.0);
    }
    CHECK(both["methods"][method]["robustness"]["mean"].is_null());
  }

  // Value-for-value agreement between the two report formats.
  CHECK(read_json(p.dir / "m12" / "metrics.json") == both);
  const auto lines = split(slurp(p.dir / "m12" / "metrics.csv"), '\n');
  const auto header = split(lines.at(0), ',');
  std::size_t rows = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const auto cells = split(lines[r], ',');
    REQUIRE(cells.size() == header.size());
    const json& m = both["methods"][cells[0]];
    for (std::size_t c = 1; c + 1 < header.size(); ++c) {
      const auto us = header[c].rfind('_');
      const json& v = m[header[c].substr(0, us)][header[c].substr(us + 1)];
      if (v.is_null()) {
        CHECK(cells[c].empty());
      } else {
        CHECK(std::stod(cells[c]) == v.get<double>());
      }
    }
    CHECK(cells.back() == "2");
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(header.back() == "runs");
  CHECK_THROWS_AS(cmd_metrics(cfg, {{p.model, p.data, p.expl}}, p.dir / "m1", false), ValidationError);
}

TEST_CASE("tune: single-point grid echoes its input") {
  Pipeline& p = shared_pipeline();
  const json out = cmd_tune(p.cfg, "flextime", p.model, p.data, p.dir / "tune.json", false);
  CHECK(out["L"] == 8);
  CHECK(out["N"] == 33);
  CHECK(out["r"] == 0.1);
  CHECK(out["grid"].size() == 1);
  CHECK(read_json(p.dir / "tune.json") == out);

  const json dm = cmd_tune(p.cfg, "dynamask_freq", p.model, p.data, p.dir / "tune_dm.json", false);
  CHECK(dm["r"] == 0.1);
  CHECK(!dm.contains("L"));
  CHECK_THROWS_AS(cmd_tune(p.cfg, "saliency", p.model, p.data, p.dir / "tune_x.json", false), ValidationError);
}

TEST_CASE("demo gibbs: FIR beats DFT zeroing and figures are valid SVG") {
  TempDir dir;
  const RunConfig cfg = parse_config(json::object());
  const json report = cmd_demo_gibbs(cfg, dir.path(), false);
  CHECK(report["fir_attenuation_db"].get<double>() >= 50.0);
  CHECK(report["dft_zeroing_attenuation_db"].get<double>() <= 25.0);
  CHECK(report["fir_better"] == true);
  CHECK(read_json(dir / "gibbs.json") == report);
  for (const char* f : {"gibbs_time.svg", "gibbs_response.svg"}) {
    const std::string svg = slurp(dir / f);
    CHECK(well_formed_error(svg) == "");
  }
}

TEST_CASE("cli binary: exit codes and no side effects on invalid config") {
  TempDir dir;
  spit(dir / "corrupt.json", "{\"seed\": 1,");
  spit(dir / "unknown.json", "{\"dat\": {}}");
  json j = tiny_config();
  spit(dir / "tiny.json", j.dump());

  CHECK(run_cli("gen --config " + (dir / "corrupt.json").string() + " --out " + (dir / "out1").string()) == kExitConfig);
  CHECK(!fs::exists(dir / "out1"));
  CHECK(run_cli("gen --config " + (dir / "unknown.json").string() + " --out " + (dir / "out2").string()) == kExitConfig);
  CHECK(!fs::exists(dir / "out2"));
  CHECK(run_cli("gen --bogus") == kExitConfig);
  CHECK(run_cli("gen --config " + (dir / "tiny.json").string() + " --workers 0 --out " + (dir / "out3").string()) ==
        kExitConfig);

  CHECK(run_cli("gen --config " + (dir / "tiny.json").string() + " --out " + (dir / "d").string()) == kExitOk);
  CHECK(fs::exists(dir / "d" / "test.flxt"));
  CHECK(run_cli("gen --config " + (dir / "tiny.json").string() + " --out " + (dir / "d").string()) == kExitConfig);

  // A seed from the environment changes the data; --force overwrites.
  const std::string before = slurp(dir / "d" / "test.flxt");
  CHECK(run_cli("gen --config " + (dir / "tiny.json").string() + " --force --out " + (dir / "d").string(),
                "FLEX_SEED=99") == kExitOk);
  CHECK(slurp(dir / "d" / "test.flxt") != before);
  CHECK(run_cli("gen --config " + (dir / "tiny.json").string() + " --seed 7 --force --out " + (dir / "d").string()) ==
        kExitOk);
  CHECK(slurp(dir / "d" / "test.flxt") == before);

  // Unwritable output location is a runtime failure.
  spit(dir / "file", "x");
  CHECK(run_cli("demo gibbs --taps 101 --out " + (dir / "file" / "sub").string()) == kExitRuntime);

  CHECK(run_cli("demo gibbs --band 124 130 --taps 8193 --out " + (dir / "gibbs").string()) == kExitOk);
  CHECK(fs::exists(dir / "gibbs" / "gibbs.json"));
  CHECK(run_cli("demo gibbs --band 130 124 --out " + (dir / "gibbs2").string()) == kExitConfig);
  CHECK(!fs::exists(dir / "gibbs2"));
}
