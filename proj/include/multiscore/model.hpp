// Copyright (c) 2026 The multiscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "multiscore/rng.hpp"
#include "multiscore/stage.hpp"

namespace multiscore {

struct ModelConfig {
  std::size_t input_dim = 1;
  /// 0 gives a linear softmax classifier.
  std::size_t hidden_width = 32;
  /// Dropout on the hidden layer, in [0, 1).
  double dropout_rate = 0.3;
  std::uint64_t seed = 0;
};

/// Softmax classifier with an optional tanh hidden layer.
///
/// Parameters live in one flat vector laid out as W1 (H×D), b1 (H), W2 (K×H),
/// b2 (K), all column-major; with no hidden layer only W2 (K×D) and b2 remain.
/// Inputs are standardized with `input_shift` and `input_scale` before the
/// first layer.
struct ReferenceModel {
  ModelConfig config;
  Eigen::VectorXd params;
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;

  bool has_hidden() const noexcept { return config.hidden_width > 0; }
  std::size_t first_width() const noexcept {
    return has_hidden() ? config.hidden_width : config.input_dim;
  }

  Eigen::Map<const Eigen::MatrixXd> w1() const;
  Eigen::Map<const Eigen::VectorXd> b1() const;
  Eigen::Map<const Eigen::MatrixXd> w2() const;
  Eigen::Map<const Eigen::VectorXd> b2() const;
};

std::size_t parameter_count(const ModelConfig& config);

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Deterministic in
/// config.seed. Throws ValidationError for input_dim < 1 or dropout outside
/// [0, 1).
ReferenceModel init_model(const ModelConfig& config);

struct ForwardResult {
  StageDistribution logits{};
  StageDistribution probs{};
};

/// Single-epoch forward pass. With `train_mode` the hidden layer uses
/// inverted dropout drawn from `rng` (required then).
ForwardResult forward(const ReferenceModel& model, std::span<const double> features,
                      bool train_mode, Rng* rng = nullptr);

/// Row-wise softmax of N×K logits.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Scaled inverted-dropout mask (entries 0 or 1/(1-rate)) of shape N×H.
Eigen::MatrixXd sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng);

/// N×K logits for N×D inputs; `hidden_mask` multiplies the hidden activations.
Eigen::MatrixXd batch_logits(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd* hidden_mask = nullptr);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Mean cross-entropy of softmax outputs against row-stochastic targets and
/// its gradient with respect to `model.params`.
LossAndGradient loss_and_gradient(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets,
                                  const Eigen::MatrixXd* hidden_mask = nullptr);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(std::size_t num_params, double lr = 1e-3, double beta1 = 0.9,
                          double beta2 = 0.999, double epsilon = 1e-8);

/// One bias-corrected Adam update. Throws NumericError naming the first
/// non-finite gradient entry; `params` and `state` are left untouched then.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);
inline void adam_step(ReferenceModel& model, const Eigen::VectorXd& grads, AdamState& state) {
  adam_step(model.params, grads, state);
}

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 128;
  /// One iteration is one shuffled pass over the training rows.
  std::size_t max_iterations = 100;
  /// Stop after this many validation checks without improvement.
  std::size_t patience = 10;
  std::uint64_t seed = 0;
};

enum class StopReason { early_stop, max_iterations };
std::string_view to_string(StopReason reason) noexcept;

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_macro_f1;
  std::size_t best_check = 0;
  StopReason stop_reason = StopReason::max_iterations;
};

struct TrainResult {
  ReferenceModel model;
  TrainHistory history;
};

/// Mini-batch Adam on cross-entropy against `targets` (N×K, rows stochastic),
/// validating macro-F1 once per iteration and returning the best snapshot.
/// Input standardization is fitted on `inputs`. Throws ValidationError for an
/// empty training or validation set or mismatched shapes.
TrainResult train(ReferenceModel model, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const Eigen::MatrixXd& val_inputs,
                  std::span<const SleepStage> val_labels, const TrainConfig& config);

/// Deterministic (dropout off) T×K probabilities.
Eigen::MatrixXd predict_proba(const ReferenceModel& model, const Eigen::MatrixXd& inputs);

/// Mean of `passes` stochastic forward passes with dropout on. Throws
/// ConfigError when the model has no dropout or passes < 1.
Eigen::MatrixXd mc_dropout_predict(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                                   std::size_t passes, std::uint64_t seed);

/// Text checkpoint: `key=value` header lines, then one parameter per line.
std::string serialize_model(const ReferenceModel& model);
ReferenceModel parse_model(std::string_view text);

}  // namespace multiscore
