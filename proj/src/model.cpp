// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#include "flextime/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "flextime/error.hpp"
#include "flextime/parallel.hpp"

namespace flextime {
namespace {

using Matrix = Eigen::MatrixXd;  // channels x time, column-major
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-thread scratch reused across calls. Fresh multi-megabyte buffers on every
// pass cost more in page faults than the GEMMs themselves.
struct Workspace {
  std::vector<Matrix> acts;                     // acts[0] = input, acts[i + 1] = output of layer i
  std::vector<RowMatrix> padded;                // conv: zero-padded input, channels x (len + 2 pad)
  std::vector<Matrix> columns;                  // conv: im2col, (C_in * k) x out_len
  std::vector<std::vector<Eigen::Index>> argmax;  // maxpool: flat input index per output element
  Matrix delta, din, dcol;
  RowMatrix dpadded;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void im2col(const Matrix& in, const LayerSpec& layer, std::size_t out_len, RowMatrix& padded, Matrix& col) {
  const auto c_in = in.rows();
  const auto len = in.cols();
  const auto k = static_cast<Eigen::Index>(layer.kernel);
  const auto pad = static_cast<Eigen::Index>(layer.padding);
  const auto stride = static_cast<Eigen::Index>(layer.stride);
  padded.resize(c_in, len + 2 * pad);
  padded.leftCols(pad).setZero();
  padded.rightCols(pad).setZero();
  padded.middleCols(pad, len) = in;
  col.resize(c_in * k, static_cast<Eigen::Index>(out_len));
  for (Eigen::Index t = 0; t < col.cols(); ++t) {
    double* dst = col.col(t).data();
    for (Eigen::Index c = 0; c < c_in; ++c) {
      const double* src = padded.row(c).data() + t * stride;
      std::copy(src, src + k, dst + c * k);
    }
  }
}

void col2im(const Matrix& dcol, const LayerSpec& layer, RowMatrix& dpadded, Matrix& din) {
  const auto c_in = din.rows();
  const auto len = din.cols();
  const auto k = static_cast<Eigen::Index>(layer.kernel);
  const auto pad = static_cast<Eigen::Index>(layer.padding);
  const auto stride = static_cast<Eigen::Index>(layer.stride);
  dpadded.setZero(c_in, len + 2 * pad);
  for (Eigen::Index t = 0; t < dcol.cols(); ++t) {
    const double* src = dcol.col(t).data();
    for (Eigen::Index c = 0; c < c_in; ++c) {
      double* dst = dpadded.row(c).data() + t * stride;
      for (Eigen::Index j = 0; j < k; ++j) dst[j] += src[c * k + j];
    }
  }
  din = dpadded.middleCols(pad, len);
}

void load_input(const ModelSpec& spec, const TimeSeries& ts, Matrix& out) {
  detail::require(ts.length == spec.input_length && ts.channels == spec.input_channels,
                  "model: input shape " + std::to_string(ts.length) + "x" + std::to_string(ts.channels) +
                      " does not match spec " + std::to_string(spec.input_length) + "x" +
                      std::to_string(spec.input_channels));
  // TimeSeries is row-major [T x V], i.e. column-major [V x T].
  out = Eigen::Map<const Matrix>(ts.samples.data(), static_cast<Eigen::Index>(ts.channels),
                                 static_cast<Eigen::Index>(ts.length));
}

// Runs the network, leaving activations in the workspace. Returns the logits.
std::vector<double> run_forward(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts,
                                Workspace& ws) {
  const auto shapes = spec.shapes();
  const std::size_t n = spec.layers.size();
  detail::require(params.weights.size() == n && params.biases.size() == n,
                  "model: parameter tensors do not match the layer count");
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    const bool conv = l.kind == LayerKind::Conv1d;
    detail::require(params.weights[i].size() == (conv ? l.channels * shapes[i].channels * l.kernel : 0) &&
                        params.biases[i].size() == (conv ? l.channels : 0),
                    "model: layer " + std::to_string(i) + " parameters do not match the spec");
  }
  ws.acts.resize(n + 1);
  ws.padded.resize(n);
  ws.columns.resize(n);
  ws.argmax.resize(n);
  load_input(spec, ts, ws.acts[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& layer = spec.layers[i];
    const FeatureShape out_shape = shapes[i + 1];
    const Matrix& act = ws.acts[i];
    Matrix& next = ws.acts[i + 1];
    switch (layer.kind) {
      case LayerKind::Conv1d: {
        im2col(act, layer, out_shape.length, ws.padded[i], ws.columns[i]);
        Eigen::Map<const RowMatrix> w(params.weights[i].data(), static_cast<Eigen::Index>(layer.channels),
                                      ws.columns[i].rows());
        Eigen::Map<const Eigen::VectorXd> b(params.biases[i].data(), static_cast<Eigen::Index>(layer.channels));
        next.noalias() = w * ws.columns[i];
        next.colwise() += b;
        break;
      }
      case LayerKind::ReLU:
        next = act.cwiseMax(0.0);
        break;
      case LayerKind::MaxPool1d: {
        next.resize(act.rows(), static_cast<Eigen::Index>(out_shape.length));
        auto& arg = ws.argmax[i];
        arg.resize(static_cast<std::size_t>(next.size()));
        for (Eigen::Index t = 0; t < next.cols(); ++t) {
          const Eigen::Index start = t * static_cast<Eigen::Index>(layer.stride);
          for (Eigen::Index c = 0; c < act.rows(); ++c) {
            Eigen::Index best = start;
            double best_value = act(c, start);
            for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(layer.kernel); ++j) {
              // Strict comparison keeps the first (lowest-index) maximum.
              if (act(c, start + j) > best_value) {
                best_value = act(c, start + j);
                best = start + j;
              }
            }
            next(c, t) = best_value;
            arg[static_cast<std::size_t>(t * next.rows() + c)] = best;
          }
        }
        break;
      }
      case LayerKind::AvgPool1d: {
        next.resize(act.rows(), static_cast<Eigen::Index>(out_shape.length));
        const auto k = static_cast<Eigen::Index>(layer.kernel);
        for (Eigen::Index t = 0; t < next.cols(); ++t) {
          const Eigen::Index start = t * static_cast<Eigen::Index>(layer.stride);
          for (Eigen::Index c = 0; c < act.rows(); ++c) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) acc += act(c, start + j);
            next(c, t) = acc / static_cast<double>(k);
          }
        }
        break;
      }
    }
  }
  const Matrix& out = ws.acts[n];
  return std::vector<double>(out.data(), out.data() + out.size());
}

// Backpropagates d(loss)/d(logits) through the activations left by run_forward. Writes the
// input gradient when `din_out` is non-null and accumulates parameter gradients when `grads` is.
void run_backward(const ModelSpec& spec, const ModelParams& params, Workspace& ws, std::span<const double> dlogits,
                  std::vector<double>* din_out, ModelParams* grads) {
  const std::size_t n = spec.layers.size();
  const Matrix& last = ws.acts[n];
  ws.delta = Eigen::Map<const Matrix>(dlogits.data(), last.rows(), last.cols());
  for (std::size_t ii = n; ii-- > 0;) {
    const LayerSpec& layer = spec.layers[ii];
    const Matrix& input = ws.acts[ii];
    const bool need_input_grad = ii > 0 || din_out != nullptr;
    Matrix& din = ws.din;
    switch (layer.kind) {
      case LayerKind::Conv1d: {
        const Matrix& col = ws.columns[ii];
        Eigen::Map<const RowMatrix> w(params.weights[ii].data(), static_cast<Eigen::Index>(layer.channels),
                                      col.rows());
        if (grads) {
          Eigen::Map<RowMatrix> dw(grads->weights[ii].data(), w.rows(), w.cols());
          Eigen::Map<Eigen::VectorXd> db(grads->biases[ii].data(), w.rows());
          dw.noalias() += ws.delta * col.transpose();
          // Scalar loop: the order of a vectorized Eigen reduction depends on buffer alignment,
          // which differs between threads.
          for (Eigen::Index c = 0; c < ws.delta.rows(); ++c) {
            double acc = 0.0;
            for (Eigen::Index t = 0; t < ws.delta.cols(); ++t) acc += ws.delta(c, t);
            db[c] += acc;
          }
        }
        if (need_input_grad) {
          ws.dcol.noalias() = w.transpose() * ws.delta;
          din.resize(input.rows(), input.cols());
          col2im(ws.dcol, layer, ws.dpadded, din);
        }
        break;
      }
      case LayerKind::ReLU:
        din = (input.array() > 0.0).select(ws.delta, 0.0);
        break;
      case LayerKind::MaxPool1d: {
        din.setZero(input.rows(), input.cols());
        const auto& arg = ws.argmax[ii];
        for (Eigen::Index t = 0; t < ws.delta.cols(); ++t) {
          for (Eigen::Index c = 0; c < ws.delta.rows(); ++c) {
            din(c, arg[static_cast<std::size_t>(t * ws.delta.rows() + c)]) += ws.delta(c, t);
          }
        }
        break;
      }
      case LayerKind::AvgPool1d: {
        din.setZero(input.rows(), input.cols());
        const auto k = static_cast<Eigen::Index>(layer.kernel);
        for (Eigen::Index t = 0; t < ws.delta.cols(); ++t) {
          const Eigen::Index start = t * static_cast<Eigen::Index>(layer.stride);
          for (Eigen::Index j = 0; j < k; ++j) din.col(start + j) += ws.delta.col(t) / static_cast<double>(k);
        }
        break;
      }
    }
    if (!need_input_grad) return;
    ws.delta.swap(din);
  }
  if (din_out) din_out->assign(ws.delta.data(), ws.delta.data() + ws.delta.size());
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams g;
  g.seed = params.seed;
  for (const auto& w : params.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::AvgPool1d: return "avgpool1d";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "conv1d") return LayerKind::Conv1d;
  if (name == "relu") return LayerKind::ReLU;
  if (name == "maxpool1d") return LayerKind::MaxPool1d;
  if (name == "avgpool1d") return LayerKind::AvgPool1d;
  detail::fail("unknown layer type '" + name + "'");
}

std::vector<FeatureShape> ModelSpec::shapes() const {
  detail::require(input_length >= 1 && input_channels >= 1, "ModelSpec: empty input shape");
  detail::require(classes >= 2, "ModelSpec: need at least 2 classes");
  detail::require(!layers.empty(), "ModelSpec: no layers");
  std::vector<FeatureShape> out{{input_channels, input_length}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    FeatureShape s = out.back();
    const std::string where = "ModelSpec layer " + std::to_string(i) + " (" + to_string(l.kind) + "): ";
    switch (l.kind) {
      case LayerKind::Conv1d: {
        detail::require(l.kernel >= 1 && l.stride >= 1 && l.channels >= 1, where + "kernel, stride, channels must be >= 1");
        const std::size_t padded = s.length + 2 * l.padding;
        detail::require(padded >= l.kernel, where + "kernel longer than padded input");
        s = {l.channels, (padded - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::ReLU:
        break;
      case LayerKind::MaxPool1d:
      case LayerKind::AvgPool1d:
        detail::require(l.kernel >= 1 && l.stride >= 1, where + "kernel and stride must be >= 1");
        detail::require(l.padding == 0, where + "padded pooling is not supported");
        detail::require(s.length >= l.kernel, where + "kernel longer than input");
        s.length = (s.length - l.kernel) / l.stride + 1;
        break;
    }
    out.push_back(s);
  }
  detail::require(out.back().channels == classes && out.back().length == 1,
                  "ModelSpec: network output is " + std::to_string(out.back().channels) + "x" +
                      std::to_string(out.back().length) + ", expected " + std::to_string(classes) + "x1");
  return out;
}

ModelSpec ModelSpec::conv_pool(std::size_t input_length, std::size_t classes, std::size_t width1,
                               std::size_t width2, std::size_t kernel) {
  ModelSpec spec;
  spec.input_length = input_length;
  spec.input_channels = 1;
  spec.classes = classes;
  const std::size_t pad = kernel / 2;
  spec.layers = {LayerSpec::conv(kernel, width1, pad), LayerSpec::relu(),     LayerSpec::maxpool(2, 2),
                 LayerSpec::conv(kernel, width2, pad), LayerSpec::relu(),     LayerSpec::maxpool(2, 2),
                 LayerSpec::conv(kernel, classes, pad), LayerSpec::avgpool(input_length / 4, input_length / 4)};
  return spec;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

void ModelParams::validate(const ModelSpec& spec) const {
  const auto shapes = spec.shapes();
  detail::require(weights.size() == spec.layers.size() && biases.size() == spec.layers.size(),
                  "ModelParams: tensor count does not match layer count");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    std::size_t wn = 0, bn = 0;
    if (l.kind == LayerKind::Conv1d) {
      wn = l.channels * shapes[i].channels * l.kernel;
      bn = l.channels;
    }
    detail::require(weights[i].size() == wn && biases[i].size() == bn,
                    "ModelParams: layer " + std::to_string(i) + " tensor shape mismatch");
    for (double x : weights[i]) detail::require(std::isfinite(x), "ModelParams: non-finite weight");
    for (double x : biases[i]) detail::require(std::isfinite(x), "ModelParams: non-finite bias");
  }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  const auto shapes = spec.shapes();
  ModelParams p;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != LayerKind::Conv1d) {
      p.weights.emplace_back();
      p.biases.emplace_back();
      continue;
    }
    const std::size_t fan_in = shapes[i].channels * l.kernel;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(l.channels * fan_in);
    for (double& x : w) x = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(l.channels, 0.0);
  }
  return p;
}

PredictionDistribution softmax(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  PredictionDistribution p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - mx));
  for (double& x : p) x /= sum;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> logits(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts) {
  return run_forward(spec, params, ts, workspace());
}

PredictionDistribution forward(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts) {
  return softmax(logits(spec, params, ts));
}

LossGradient loss_gradient(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts,
                           std::span<const double> target, bool want_input_gradient, bool want_param_gradient) {
  detail::require(target.size() == spec.classes, "model: target distribution has wrong length");
  Workspace& ws = workspace();
  const auto z = run_forward(spec, params, ts, ws);
  LossGradient out;
  out.probabilities = softmax(z);
  const double mx = *std::max_element(z.begin(), z.end());
  double lse = 0.0;
  for (double v : z) lse += std::exp(v - mx);
  lse = mx + std::log(lse);
  double target_mass = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    out.loss -= target[c] * (z[c] - lse);
    target_mass += target[c];
  }
  if (!want_input_gradient && !want_param_gradient) return out;
  // d/dz_i of -sum_c t_c log softmax(z)_c = (sum_c t_c) p_i - t_i
  std::vector<double> dz(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) dz[i] = target_mass * out.probabilities[i] - target[i];
  if (want_param_gradient) out.param_gradient = zeros_like(params);
  run_backward(spec, params, ws, dz, want_input_gradient ? &out.input_gradient : nullptr,
               want_param_gradient ? &out.param_gradient : nullptr);
  return out;
}

std::vector<double> backward_input(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts,
                                   std::span<const double> target_dist) {
  return loss_gradient(spec, params, ts, target_dist, true, false).input_gradient;
}

BatchPrediction predict_batch(const ModelSpec& spec, const ModelParams& params, std::span<const TimeSeries> batch,
                              std::size_t workers) {
  BatchPrediction out;
  out.distributions.resize(batch.size());
  out.labels.resize(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    out.distributions[i] = forward(spec, params, batch[i]);
    out.labels[i] = static_cast<int>(argmax(out.distributions[i]));
  });
  return out;
}

double accuracy(const ModelSpec& spec, const ModelParams& params, std::span<const TimeSeries> inputs,
                std::span<const int> labels, std::size_t workers) {
  detail::require(inputs.size() == labels.size() && !inputs.empty(), "accuracy: inputs/labels mismatch");
  const auto pred = predict_batch(spec, params, inputs, workers);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += pred.labels[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

void TrainConfig::validate() const {
  detail::require(max_epochs >= 1, "TrainConfig: max_epochs must be >= 1");
  detail::require(learning_rate > 0.0 && std::isfinite(learning_rate), "TrainConfig: learning_rate must be > 0");
  detail::require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  detail::require(patience >= 1, "TrainConfig: patience must be >= 1");
  detail::require(workers >= 1, "TrainConfig: workers must be >= 1");
  detail::require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0,
                  "TrainConfig: invalid Adam constants");
}

TrainResult train(const ModelSpec& spec, std::span<const TimeSeries> train_inputs, std::span<const int> train_labels,
                  std::span<const TimeSeries> val_inputs, std::span<const int> val_labels, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  spec.validate();
  cfg.validate();
  detail::require(!train_inputs.empty() && train_inputs.size() == train_labels.size(),
                  "train: training set empty or labels mismatched");
  detail::require(!val_inputs.empty() && val_inputs.size() == val_labels.size(),
                  "train: validation set empty or labels mismatched");
  for (int y : train_labels) {
    detail::require(y >= 0 && static_cast<std::size_t>(y) < spec.classes, "train: label out of range");
  }
  for (int y : val_labels) {
    detail::require(y >= 0 && static_cast<std::size_t>(y) < spec.classes, "train: label out of range");
  }

  TrainResult result;
  ModelParams params = init_params(spec, cfg.seed);
  ModelParams m1 = zeros_like(params), m2 = zeros_like(params);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_inputs.size());
  std::iota(order.begin(), order.end(), 0);

  double best_acc = -1.0;
  std::size_t since_best = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t n = end - begin;
      std::vector<LossGradient> per_sample(n);
      parallel_for(n, cfg.workers, [&](std::size_t j) {
        const std::size_t idx = order[begin + j];
        std::vector<double> target(spec.classes, 0.0);
        target[static_cast<std::size_t>(train_labels[idx])] = 1.0;
        per_sample[j] = loss_gradient(spec, params, train_inputs[idx], target, false, true);
      });
      // Fixed-order reduction keeps results independent of the worker count.
      ModelParams grad = zeros_like(params);
      double batch_loss = 0.0;
      for (auto& s : per_sample) {
        batch_loss += s.loss;
        for (std::size_t i = 0; i < grad.weights.size(); ++i) {
          for (std::size_t k = 0; k < grad.weights[i].size(); ++k) grad.weights[i][k] += s.param_gradient.weights[i][k];
          for (std::size_t k = 0; k < grad.biases[i].size(); ++k) grad.biases[i][k] += s.param_gradient.biases[i][k];
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + " (learning rate " + std::to_string(cfg.learning_rate) + ")");
      }
      epoch_loss += batch_loss;
      ++step;
      const double scale = 1.0 / static_cast<double>(n);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto adam = [&](std::vector<double>& w, std::vector<double>& g, std::vector<double>& a, std::vector<double>& b) {
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double gk = g[k] * scale;
          a[k] = cfg.beta1 * a[k] + (1.0 - cfg.beta1) * gk;
          b[k] = cfg.beta2 * b[k] + (1.0 - cfg.beta2) * gk * gk;
          w[k] -= cfg.learning_rate * (a[k] / c1) / (std::sqrt(b[k] / c2) + cfg.epsilon);
        }
      };
      for (std::size_t i = 0; i < params.weights.size(); ++i) {
        adam(params.weights[i], grad.weights[i], m1.weights[i], m2.weights[i]);
        adam(params.biases[i], grad.biases[i], m1.biases[i], m2.biases[i]);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_accuracy = accuracy(spec, params, val_inputs, val_labels, cfg.workers);
    if (rec.val_accuracy > best_acc) {
      best_acc = rec.val_accuracy;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
      rec.best = true;
    } else {
      ++since_best;
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (since_best >= cfg.patience || best_acc >= 1.0) break;
  }
  result.best_val_accuracy = best_acc;
  result.final_params = std::move(params);
  return result;
}

LossGradient Classifier::loss_and_input_gradient(const TimeSeries&, std::span<const double>) const {
  throw UnsupportedError("classifier does not expose input gradients");
}

CnnClassifier::CnnClassifier(ModelSpec spec, ModelParams params) : spec_(std::move(spec)), params_(std::move(params)) {
  params_.validate(spec_);
}

PredictionDistribution CnnClassifier::predict(const TimeSeries& ts) const { return forward(spec_, params_, ts); }

LossGradient CnnClassifier::loss_and_input_gradient(const TimeSeries& ts, std::span<const double> target) const {
  return loss_gradient(spec_, params_, ts, target, true, false);
}

}  // namespace flextime
