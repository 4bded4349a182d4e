// Copyright 2026 The flextime Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flextime/signal.hpp"

namespace flextime {

enum class LayerKind { Conv1d, ReLU, MaxPool1d, AvgPool1d };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t channels = 0;  // output channels, conv only
  std::size_t padding = 0;

  static LayerSpec conv(std::size_t kernel, std::size_t channels, std::size_t padding, std::size_t stride = 1) {
    return {LayerKind::Conv1d, kernel, stride, channels, padding};
  }
  static LayerSpec relu() { return {LayerKind::ReLU, 1, 1, 0, 0}; }
  static LayerSpec maxpool(std::size_t kernel, std::size_t stride) { return {LayerKind::MaxPool1d, kernel, stride, 0, 0}; }
  static LayerSpec avgpool(std::size_t kernel, std::size_t stride) { return {LayerKind::AvgPool1d, kernel, stride, 0, 0}; }
};

/// Activation shape between layers: channels x length.
struct FeatureShape {
  std::size_t channels = 0;
  std::size_t length = 0;
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  std::size_t input_length = 0;
  std::size_t input_channels = 1;
  std::size_t classes = 0;

  /// Shapes after each layer, starting with the input (layers.size() + 1 entries).
  /// Throws ValidationError if the layers do not chain or do not end in `classes` x 1.
  std::vector<FeatureShape> shapes() const;
  void validate() const { (void)shapes(); }

  /// Three conv blocks with max/avg pooling; the last conv emits one channel per class
  /// and the average pool collapses time, so the pooled channels are the logits.
  /// Defaults reproduce the reference synthetic-task network (T = 2000, 16 classes).
  static ModelSpec conv_pool(std::size_t input_length = 2000, std::size_t classes = 16,
                             std::size_t width1 = 64, std::size_t width2 = 64, std::size_t kernel = 31);
};

/// Conv weights are [C_out x C_in x k] row-major; biases [C_out]. Non-conv layers hold empty tensors.
struct ModelParams {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const;
  void validate(const ModelSpec& spec) const;
};

/// Kaiming-uniform (fan-in) conv weights, zero biases.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

using PredictionDistribution = std::vector<double>;

PredictionDistribution softmax(std::span<const double> logits);

std::vector<double> logits(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts);
PredictionDistribution forward(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts);

/// Gradient of -sum_c target_c * log(p_c) with respect to the input, laid out like ts.samples.
std::vector<double> backward_input(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts,
                                   std::span<const double> target_dist);

struct LossGradient {
  PredictionDistribution probabilities;
  double loss = 0.0;
  std::vector<double> input_gradient;
  ModelParams param_gradient;  // empty unless requested
};

/// One forward/backward pass. Parameter gradients are filled only when requested.
LossGradient loss_gradient(const ModelSpec& spec, const ModelParams& params, const TimeSeries& ts,
                           std::span<const double> target_dist, bool want_input_gradient,
                           bool want_param_gradient);

struct BatchPrediction {
  std::vector<PredictionDistribution> distributions;
  std::vector<int> labels;
};

BatchPrediction predict_batch(const ModelSpec& spec, const ModelParams& params,
                              std::span<const TimeSeries> batch, std::size_t workers = 1);

std::size_t argmax(std::span<const double> values);

struct TrainConfig {
  std::size_t max_epochs = 100;
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  bool best = false;
};

struct TrainResult {
  ModelParams params;  // checkpoint with the best validation accuracy
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  ModelParams final_params;  // parameters after the last epoch run
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on mean cross-entropy with early stopping on validation accuracy.
/// Throws NumericError if the loss becomes non-finite.
TrainResult train(const ModelSpec& spec, std::span<const TimeSeries> train_inputs, std::span<const int> train_labels,
                  std::span<const TimeSeries> val_inputs, std::span<const int> val_labels, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

double accuracy(const ModelSpec& spec, const ModelParams& params, std::span<const TimeSeries> inputs,
                std::span<const int> labels, std::size_t workers = 1);

/// What explainers need from a black box. Gradients are optional; explainers that
/// need them either fall back to finite differences or refuse.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual PredictionDistribution predict(const TimeSeries& ts) const = 0;

  virtual bool has_input_gradient() const { return false; }
  /// Probabilities, loss -sum_c target_c log p_c, and its input gradient.
  virtual LossGradient loss_and_input_gradient(const TimeSeries& ts, std::span<const double> target) const;
};

/// The convolutional network behind the Classifier interface.
class CnnClassifier final : public Classifier {
 public:
  CnnClassifier(ModelSpec spec, ModelParams params);

  std::size_t num_classes() const override { return spec_.classes; }
  PredictionDistribution predict(const TimeSeries& ts) const override;
  bool has_input_gradient() const override { return true; }
  LossGradient loss_and_input_gradient(const TimeSeries& ts, std::span<const double> target) const override;

  const ModelSpec& spec() const { return spec_; }
  const ModelParams& params() const { return params_; }

 private:
  ModelSpec spec_;
  ModelParams params_;
};

}  // namespace flextime
