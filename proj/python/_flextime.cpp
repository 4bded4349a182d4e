// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "flextime/app/commands.hpp"
#include "flextime/error.hpp"
#include "flextime/explain.hpp"
#include "flextime/filterbank.hpp"
#include "flextime/metrics.hpp"
#include "flextime/model.hpp"
#include "flextime/signal.hpp"
#include "flextime/synthdata.hpp"

namespace py = pybind11;
using namespace flextime;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// [T] or [T x V] array to a time series.
TimeSeries to_series(const Array& x, double sample_rate) {
  if (x.ndim() != 1 && x.ndim() != 2) throw ValidationError("expected a [T] or [T, V] array");
  const auto T = static_cast<std::size_t>(x.shape(0));
  const auto V = x.ndim() == 2 ? static_cast<std::size_t>(x.shape(1)) : std::size_t{1};
  TimeSeries ts(std::vector<double>(x.data(), x.data() + x.size()), T, V, sample_rate);
  ts.validate();
  return ts;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> series_array(const TimeSeries& ts) {
  return ts.channels == 1 ? to_array(ts.samples) : to_array(ts.samples, ts.length, ts.channels);
}

std::vector<bool> to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& gt) {
  return std::vector<bool>(gt.data(), gt.data() + gt.size());
}

py::dict explanation_dict(const Explanation& e) {
  py::dict d;
  d["method"] = e.method;
  d["target_class"] = e.target_class;
  d["saliency"] = to_array(e.saliency);
  if (!e.channel_saliency.empty()) d["channel_saliency"] = to_array(e.channel_saliency, e.saliency.size(), e.channels);
  if (!e.mask.empty()) d["mask"] = to_array(e.mask);
  if (!e.attribution.empty()) d["attribution"] = to_array(e.attribution);
  if (!e.trace.objective.empty()) {
    d["objective"] = to_array(e.trace.objective);
    d["stalled"] = e.trace.stalled;
    d["finite_difference"] = e.trace.finite_difference;
  }
  return d;
}

Explanation from_saliency(const Array& saliency) {
  Explanation e;
  e.method = "external";
  e.saliency.assign(saliency.data(), saliency.data() + saliency.size());
  return e;
}

// A classifier implemented in Python. `predict(x)` returns class probabilities for a
// [T] or [T, V] array; the optional `gradient(x, target)` returns d(-sum target*log p)/dx.
class CallbackClassifier : public Classifier {
 public:
  using Predict = std::function<Array(Array)>;
  using Gradient = std::function<Array(Array, Array)>;

  CallbackClassifier(std::size_t classes, Predict predict, std::optional<Gradient> gradient)
      : classes_(classes), predict_(std::move(predict)), gradient_(std::move(gradient)) {}

  std::size_t num_classes() const override { return classes_; }

  PredictionDistribution predict(const TimeSeries& ts) const override {
    py::gil_scoped_acquire gil;
    const Array p = predict_(series_array(ts));
    if (static_cast<std::size_t>(p.size()) != classes_) throw ValidationError("predict returned the wrong number of classes");
    return PredictionDistribution(p.data(), p.data() + p.size());
  }

  bool has_input_gradient() const override { return gradient_.has_value(); }

  LossGradient loss_and_input_gradient(const TimeSeries& ts, std::span<const double> target) const override {
    if (!gradient_) return Classifier::loss_and_input_gradient(ts, target);
    LossGradient out;
    out.probabilities = predict(ts);
    for (std::size_t c = 0; c < classes_; ++c) {
      if (target[c] != 0.0) out.loss -= target[c] * std::log(out.probabilities[c]);
    }
    py::gil_scoped_acquire gil;
    const Array g = (*gradient_)(series_array(ts), to_array(std::vector<double>(target.begin(), target.end())));
    if (static_cast<std::size_t>(g.size()) != ts.samples.size()) throw ValidationError("gradient has the wrong shape");
    out.input_gradient.assign(g.data(), g.data() + g.size());
    return out;
  }

 private:
  std::size_t classes_;
  Predict predict_;
  std::optional<Gradient> gradient_;
};

py::dict split_dict(const SynthSplit& split, const SynthConfig& cfg) {
  const std::size_t n = split.samples.size(), T = cfg.length, K = bin_count(cfg.length);
  py::array_t<double> inputs({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(T)});
  py::array_t<int> labels(static_cast<py::ssize_t>(n));
  py::array_t<bool> gt({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(K)});
  auto in = inputs.mutable_unchecked<2>();
  auto lab = labels.mutable_unchecked<1>();
  auto g = gt.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = split.samples[i];
    for (std::size_t t = 0; t < T; ++t) in(i, t) = s.ts.samples[t];
    lab(i) = s.label;
    for (std::size_t k = 0; k < K; ++k) g(i, k) = s.ground_truth_freq[k];
  }
  py::dict d;
  d["inputs"] = inputs;
  d["labels"] = labels;
  d["ground_truth"] = gt;
  d["sample_rate"] = cfg.sample_rate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_flextime, m) {
  m.doc() = "Frequency-band explanations for time-series classifiers";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);

  m.def(
      "rfft", [](const Array& x) { return rfft(std::vector<double>(x.data(), x.data() + x.size())); }, py::arg("x"),
      "One-sided DFT of a real signal.");
  m.def(
      "irfft", [](const std::vector<Complex>& c, std::size_t n) { return to_array(irfft(c, n)); }, py::arg("spectrum"),
      py::arg("n"), "Inverse of rfft for a signal of length n.");

  py::class_<Filterbank>(m, "Filterbank")
      .def(py::init([](std::size_t bands, std::size_t taps, double sample_rate) {
             return design_filterbank(bands, taps, sample_rate);
           }),
           py::arg("bands"), py::arg("taps"), py::arg("sample_rate") = 1.0)
      .def_property_readonly("band_count", &Filterbank::band_count)
      .def_property_readonly("tap_count", &Filterbank::tap_count)
      .def_readonly("band_edges", &Filterbank::band_edges)
      .def_property_readonly("taps",
                             [](const Filterbank& fb) {
                               std::vector<double> all;
                               for (const auto& f : fb.filters) all.insert(all.end(), f.taps.begin(), f.taps.end());
                               return to_array(all, fb.band_count(), fb.tap_count());
                             })
      .def(
          "decompose",
          [](const Filterbank& fb, const Array& x) {
            const auto dec = decompose(to_series(x, fb.sample_rate), fb);
            if (dec.channels != 1) throw ValidationError("decompose: pass a single-channel signal");
            return to_array(dec.bands, dec.band_count, dec.length);
          },
          py::arg("x"), "Per-band filtered copies of x, shape [L, T].")
      .def(
          "reconstruct",
          [](const Filterbank& fb, const Array& x, const std::vector<double>& mask) {
            const TimeSeries ts = to_series(x, fb.sample_rate);
            return series_array(masked_reconstruct(decompose(ts, fb), BandMask{mask}));
          },
          py::arg("x"), py::arg("mask"), "Sum of mask-weighted bands.")
      .def(
          "collected_response",
          [](const Filterbank& fb, const std::vector<double>& mask, std::size_t grid_size) {
            return to_array(collected_response(fb, BandMask{mask}, grid_size));
          },
          py::arg("mask"), py::arg("grid_size"), "Magnitude response of the mask-weighted bank on a uniform grid.");

  m.def(
      "stopband_comparison",
      [](std::size_t taps, double low_hz, double high_hz, double sample_rate) {
        const auto c = stopband_comparison(taps, low_hz, high_hz, sample_rate);
        py::dict d;
        d["fir_attenuation_db"] = c.fir_attenuation_db;
        d["dft_zeroing_attenuation_db"] = c.dft_zeroing_attenuation_db;
        d["fir_guard_hz"] = c.fir_guard_hz;
        d["dft_guard_hz"] = c.dft_guard_hz;
        return d;
      },
      py::arg("taps"), py::arg("low_hz"), py::arg("high_hz"), py::arg("sample_rate"));

  m.def(
      "generate",
      [](std::size_t n, std::uint64_t seed, const std::string& split, std::size_t length, double sample_rate,
         std::size_t workers) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.length = length;
        cfg.sample_rate = sample_rate;
        if (split == "train") return split_dict(generate_iid(cfg, kTrainSplit, n, workers), cfg);
        if (split == "val") return split_dict(generate_iid(cfg, kValSplit, n, workers), cfg);
        if (split == "test") return split_dict(generate_balanced(cfg, kTestSplit, n, workers), cfg);
        throw ValidationError("generate: split must be 'train', 'val' or 'test'");
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("split") = "train", py::arg("length") = 2000,
      py::arg("sample_rate") = 2000.0, py::arg("workers") = 1,
      "Synthetic samples: dict with inputs [n, T], labels [n] and ground_truth [n, K].");

  py::class_<Classifier>(m, "Classifier")
      .def_property_readonly("num_classes", &Classifier::num_classes)
      .def(
          "predict", [](const Classifier& c, const Array& x) { return to_array(c.predict(to_series(x, 1.0))); },
          py::arg("x"));

  py::class_<CnnClassifier, Classifier>(m, "Model")
      .def_static(
          "load",
          [](const std::string& path) {
            auto lm = app::load_model(path);
            return CnnClassifier(std::move(lm.spec), std::move(lm.params));
          },
          py::arg("path"), "Load weights written by `flextime train`.")
      .def_property_readonly("parameter_count", [](const CnnClassifier& c) { return c.params().parameter_count(); });

  py::class_<CallbackClassifier, Classifier>(m, "CallbackClassifier")
      .def(py::init<std::size_t, CallbackClassifier::Predict, std::optional<CallbackClassifier::Gradient>>(),
           py::arg("num_classes"), py::arg("predict"), py::arg("gradient") = py::none());

  m.def(
      "flextime",
      [](const Classifier& model, const Array& x, const Filterbank& fb, double ratio, std::size_t iterations,
         double step_size, std::optional<std::size_t> target) {
        FlexConfig cfg;
        cfg.bands = fb.band_count();
        cfg.taps = fb.tap_count();
        cfg.ratio = ratio;
        cfg.iterations = iterations;
        cfg.step_size = step_size;
        return explanation_dict(flextime_explain(model, to_series(x, fb.sample_rate), fb, target, cfg).explanation);
      },
      py::arg("model"), py::arg("x"), py::arg("filterbank"), py::arg("r") = 0.1, py::arg("iterations") = 1000,
      py::arg("step_size") = 1.0, py::arg("target") = py::none(), "Learn a band mask explaining the prediction for x.");

  m.def(
      "dynamask_freq",
      [](const Classifier& model, const Array& x, double ratio, std::size_t window, std::size_t iterations,
         std::optional<std::size_t> target, double sample_rate) {
        DynamaskFreqConfig cfg;
        cfg.ratio = ratio;
        cfg.window = window;
        cfg.iterations = iterations;
        return explanation_dict(dynamask_freq_explain(model, to_series(x, sample_rate), target, cfg));
      },
      py::arg("model"), py::arg("x"), py::arg("r") = 0.1, py::arg("W") = 10, py::arg("iterations") = 1000,
      py::arg("target") = py::none(), py::arg("sample_rate") = 1.0);

  m.def(
      "freqrise",
      [](const Classifier& model, const Array& x, std::size_t n_masks, std::size_t grid_size, double keep_probability,
         std::uint64_t seed, std::optional<std::size_t> target, double sample_rate) {
        FreqRiseConfig cfg;
        cfg.n_masks = n_masks;
        cfg.grid_size = grid_size;
        cfg.keep_probability = keep_probability;
        cfg.seed = seed;
        return explanation_dict(freqrise_explain(model, to_series(x, sample_rate), target, cfg));
      },
      py::arg("model"), py::arg("x"), py::arg("n_masks") = 3000, py::arg("grid_size") = 64,
      py::arg("keep_probability") = 0.5, py::arg("seed") = 0, py::arg("target") = py::none(),
      py::arg("sample_rate") = 1.0);

  m.def(
      "gradient",
      [](const std::string& method, const Classifier& model, const Array& x, std::optional<std::size_t> target,
         std::size_t ig_steps, double sample_rate) {
        return explanation_dict(
            gradient_explain(gradient_method_from_string(method), model, to_series(x, sample_rate), target, ig_steps));
      },
      py::arg("method"), py::arg("model"), py::arg("x"), py::arg("target") = py::none(), py::arg("ig_steps") = 50,
      py::arg("sample_rate") = 1.0, "Gradient attribution in the frequency domain: saliency, gxi or ig.");

  m.def(
      "localization",
      [](const Array& saliency, const py::array_t<bool, py::array::c_style | py::array::forcecast>& ground_truth) {
        const auto s = localization(std::span<const double>(saliency.data(), saliency.size()), to_mask(ground_truth));
        py::dict d;
        d["auprc"] = s.auprc;
        d["aup"] = s.aup;
        d["aur"] = s.aur;
        return d;
      },
      py::arg("saliency"), py::arg("ground_truth"));
  m.def(
      "complexity", [](const Array& saliency) { return complexity(std::span<const double>(saliency.data(), saliency.size())); },
      py::arg("saliency"));
  m.def(
      "faithfulness",
      [](const Classifier& model, const Array& x, const Array& saliency, std::size_t target, double keep_fraction,
         double sample_rate) {
        return faithfulness(model, to_series(x, sample_rate), from_saliency(saliency), target, keep_fraction);
      },
      py::arg("model"), py::arg("x"), py::arg("saliency"), py::arg("target"), py::arg("keep_fraction") = 0.10,
      py::arg("sample_rate") = 1.0);
}
