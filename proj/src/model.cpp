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

#include "multiscore/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "multiscore/errors.hpp"
#include "multiscore/io.hpp"
#include "multiscore/metrics.hpp"
#include "multiscore/smoothing.hpp"

namespace multiscore {

namespace {

constexpr auto K = static_cast<Eigen::Index>(kNumClasses);

struct Layout {
  Eigen::Index w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
  Eigen::Index d = 0, h = 0;
};

Layout layout(const ModelConfig& c) {
  Layout l;
  l.d = static_cast<Eigen::Index>(c.input_dim);
  l.h = static_cast<Eigen::Index>(c.hidden_width);
  if (l.h > 0) {
    l.w1 = 0;
    l.b1 = l.h * l.d;
    l.w2 = l.b1 + l.h;
    l.b2 = l.w2 + K * l.h;
  } else {
    l.w2 = 0;
    l.b2 = K * l.d;
  }
  l.total = l.b2 + K;
  return l;
}

void validate_config(const ModelConfig& c) {
  if (c.input_dim < 1) throw ValidationError("model input dimension must be at least 1");
  if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) {
    throw ValidationError("dropout rate must lie in [0, 1)");
  }
}

Eigen::MatrixXd standardize(const ReferenceModel& model, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != static_cast<Eigen::Index>(model.config.input_dim)) {
    throw ValidationError("expected " + std::to_string(model.config.input_dim) +
                          " features, got " + std::to_string(inputs.cols()));
  }
  return (inputs.rowwise() - model.input_shift.transpose()).array().rowwise() *
         model.input_scale.transpose().array();
}

}  // namespace

std::size_t parameter_count(const ModelConfig& config) {
  return static_cast<std::size_t>(layout(config).total);
}

Eigen::Map<const Eigen::MatrixXd> ReferenceModel::w1() const {
  const Layout l = layout(config);
  return {params.data() + l.w1, l.h, l.d};
}

Eigen::Map<const Eigen::VectorXd> ReferenceModel::b1() const {
  const Layout l = layout(config);
  return {params.data() + l.b1, l.h};
}

Eigen::Map<const Eigen::MatrixXd> ReferenceModel::w2() const {
  const Layout l = layout(config);
  return {params.data() + l.w2, K, l.h > 0 ? l.h : l.d};
}

Eigen::Map<const Eigen::VectorXd> ReferenceModel::b2() const {
  const Layout l = layout(config);
  return {params.data() + l.b2, K};
}

ReferenceModel init_model(const ModelConfig& config) {
  validate_config(config);
  const Layout l = layout(config);
  ReferenceModel m;
  m.config = config;
  m.params = Eigen::VectorXd::Zero(l.total);
  m.input_shift = Eigen::VectorXd::Zero(l.d);
  m.input_scale = Eigen::VectorXd::Ones(l.d);
  Rng rng(config.seed);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) m.params[offset + i] = bound * (2.0 * rng.uniform() - 1.0);
  };
  if (l.h > 0) {
    fill(l.w1, l.h * l.d, l.d);
    fill(l.w2, K * l.h, l.h);
  } else {
    fill(l.w2, K * l.d, l.d);
  }
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Eigen::MatrixXd sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

namespace {

// tanh through the vectorized exp; libm tanh dominates training otherwise.
Eigen::MatrixXd hidden_activation(const Eigen::MatrixXd& pre) {
  return (1.0 - 2.0 / ((2.0 * pre.array()).exp() + 1.0)).matrix();
}

}  // namespace

Eigen::MatrixXd batch_logits(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd* hidden_mask) {
  const Eigen::MatrixXd x = standardize(model, inputs);
  if (!model.has_hidden()) return (x * model.w2().transpose()).rowwise() + model.b2().transpose();
  Eigen::MatrixXd h = hidden_activation((x * model.w1().transpose()).rowwise() + model.b1().transpose());
  if (hidden_mask) h.array() *= hidden_mask->array();
  return (h * model.w2().transpose()).rowwise() + model.b2().transpose();
}

ForwardResult forward(const ReferenceModel& model, std::span<const double> features,
                      bool train_mode, Rng* rng) {
  if (features.size() != model.config.input_dim) {
    throw ValidationError("expected " + std::to_string(model.config.input_dim) +
                          " features, got " + std::to_string(features.size()));
  }
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::RowVectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
  Eigen::MatrixXd mask;
  const bool drop = train_mode && model.has_hidden() && model.config.dropout_rate > 0.0;
  if (drop) {
    if (!rng) throw ValidationError("forward: train mode needs a random generator");
    mask = sample_dropout_mask(1, static_cast<Eigen::Index>(model.config.hidden_width),
                               model.config.dropout_rate, *rng);
  }
  const Eigen::MatrixXd logits = batch_logits(model, x, drop ? &mask : nullptr);
  const Eigen::MatrixXd probs = softmax_rows(logits);
  ForwardResult r;
  for (Eigen::Index k = 0; k < K; ++k) {
    r.logits[static_cast<std::size_t>(k)] = logits(0, k);
    r.probs[static_cast<std::size_t>(k)] = probs(0, k);
  }
  return r;
}

LossAndGradient loss_and_gradient(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets,
                                  const Eigen::MatrixXd* hidden_mask) {
  if (targets.rows() != inputs.rows() || targets.cols() != K) {
    throw ValidationError("targets must be N x 5 and match the inputs");
  }
  const Layout l = layout(model.config);
  const auto n = static_cast<double>(inputs.rows());
  const Eigen::MatrixXd x = standardize(model, inputs);

  Eigen::MatrixXd act;  // post-activation hidden layer (before dropout)
  Eigen::MatrixXd h;    // input to the output layer
  if (model.has_hidden()) {
    act = hidden_activation((x * model.w1().transpose()).rowwise() + model.b1().transpose());
    h = hidden_mask ? Eigen::MatrixXd(act.array() * hidden_mask->array()) : act;
  } else {
    h = x;
  }
  const Eigen::MatrixXd logits = (h * model.w2().transpose()).rowwise() + model.b2().transpose();
  const Eigen::MatrixXd probs = softmax_rows(logits);

  LossAndGradient out;
  out.loss = -(targets.array() * probs.array().max(kLogClamp).log()).sum() / n;
  out.gradient = Eigen::VectorXd::Zero(l.total);

  const Eigen::MatrixXd g = (probs - targets) / n;  // N×K
  Eigen::Map<Eigen::MatrixXd>(out.gradient.data() + l.w2, K, h.cols()) = g.transpose() * h;
  Eigen::Map<Eigen::VectorXd>(out.gradient.data() + l.b2, K) = g.colwise().sum().transpose();
  if (model.has_hidden()) {
    Eigen::MatrixXd dh = g * model.w2();  // N×H
    if (hidden_mask) dh.array() *= hidden_mask->array();
    const Eigen::MatrixXd da = dh.array() * (1.0 - act.array().square());
    Eigen::Map<Eigen::MatrixXd>(out.gradient.data() + l.w1, l.h, l.d) = da.transpose() * x;
    Eigen::Map<Eigen::VectorXd>(out.gradient.data() + l.b1, l.h) = da.colwise().sum().transpose();
  }
  return out;
}

AdamState make_adam_state(std::size_t num_params, double lr, double beta1, double beta2,
                          double epsilon) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_params));
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ValidationError("adam_step: gradient and moment shapes must match the parameters");
  }
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("non-finite gradient at parameter " + std::to_string(i) + " (step " +
                         std::to_string(state.step + 1) + ")");
    }
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -=
      state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.epsilon);
}

std::string_view to_string(StopReason reason) noexcept {
  return reason == StopReason::early_stop ? "early_stop" : "max_iterations";
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx,
                            std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(idx[i]);
  return out;
}

double macro_f1(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                std::span<const SleepStage> labels) {
  const auto predicted = argmax_stages(predict_proba(model, inputs));
  return classification_scores(confusion(labels, predicted)).macro_f1;
}

}  // namespace

TrainResult train(ReferenceModel model, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const Eigen::MatrixXd& val_inputs,
                  std::span<const SleepStage> val_labels, const TrainConfig& config) {
  if (inputs.rows() == 0) throw ValidationError("train: empty training set");
  if (val_inputs.rows() == 0) throw ValidationError("train: empty validation set");
  if (static_cast<std::size_t>(val_inputs.rows()) != val_labels.size()) {
    throw ValidationError("train: validation inputs and labels differ in length");
  }
  if (targets.rows() != inputs.rows() || targets.cols() != K) {
    throw ValidationError("train: targets must be N x 5 and match the inputs");
  }
  if (config.batch_size < 1 || config.max_iterations < 1) {
    throw ValidationError("train: batch size and iteration cap must be positive");
  }

  model.input_shift = inputs.colwise().mean().transpose();
  const Eigen::VectorXd var =
      (inputs.rowwise() - model.input_shift.transpose()).array().square().colwise().mean();
  model.input_scale = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 1.0; });

  AdamState adam = make_adam_state(static_cast<std::size_t>(model.params.size()), config.lr,
                                   config.beta1, config.beta2, config.epsilon);
  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult best{model, {}};
  TrainHistory history;
  double best_score = -1.0;
  std::size_t since_best = 0;
  history.stop_reason = StopReason::max_iterations;

  const bool drop = model.has_hidden() && model.config.dropout_rate > 0.0;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const Eigen::MatrixXd xb = gather_rows(inputs, order, b, e);
      const Eigen::MatrixXd tb = gather_rows(targets, order, b, e);
      Eigen::MatrixXd mask;
      if (drop) {
        mask = sample_dropout_mask(xb.rows(), static_cast<Eigen::Index>(model.config.hidden_width),
                                   model.config.dropout_rate, rng);
      }
      const auto lg = loss_and_gradient(model, xb, tb, drop ? &mask : nullptr);
      adam_step(model, lg.gradient, adam);
      if (!model.params.allFinite()) throw NumericError("non-finite parameter after Adam step");
      loss_sum += lg.loss * static_cast<double>(e - b);
    }
    history.train_loss.push_back(loss_sum / static_cast<double>(order.size()));

    const double score = macro_f1(model, val_inputs, val_labels);
    history.val_macro_f1.push_back(score);
    if (score > best_score) {
      best_score = score;
      history.best_check = it;
      best.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.stop_reason = StopReason::early_stop;
      break;
    }
  }
  best.history = std::move(history);
  return best;
}

Eigen::MatrixXd predict_proba(const ReferenceModel& model, const Eigen::MatrixXd& inputs) {
  return softmax_rows(batch_logits(model, inputs));
}

Eigen::MatrixXd mc_dropout_predict(const ReferenceModel& model, const Eigen::MatrixXd& inputs,
                                   std::size_t passes, std::uint64_t seed) {
  if (!model.has_hidden() || model.config.dropout_rate <= 0.0) {
    throw ConfigError("MC dropout needs a hidden layer with a positive dropout rate");
  }
  if (passes < 1) throw ConfigError("MC dropout needs at least one pass");
  Rng rng(seed);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(inputs.rows(), K);
  for (std::size_t p = 0; p < passes; ++p) {
    const Eigen::MatrixXd mask =
        sample_dropout_mask(inputs.rows(), static_cast<Eigen::Index>(model.config.hidden_width),
                            model.config.dropout_rate, rng);
    sum += softmax_rows(batch_logits(model, inputs, &mask));
  }
  return sum / static_cast<double>(passes);
}

std::string serialize_model(const ReferenceModel& model) {
  std::ostringstream s;
  s << "format=multiscore-model-1\n";
  s << "input_dim=" << model.config.input_dim << '\n';
  s << "hidden_width=" << model.config.hidden_width << '\n';
  s << "dropout_rate=" << io::format_double(model.config.dropout_rate) << '\n';
  s << "seed=" << model.config.seed << '\n';
  s << "num_params=" << model.params.size() << '\n';
  for (Eigen::Index i = 0; i < model.input_shift.size(); ++i) {
    s << "shift=" << io::format_double(model.input_shift[i]) << '\n';
  }
  for (Eigen::Index i = 0; i < model.input_scale.size(); ++i) {
    s << "scale=" << io::format_double(model.input_scale[i]) << '\n';
  }
  s << "params\n";
  for (Eigen::Index i = 0; i < model.params.size(); ++i) s << io::format_double(model.params[i]) << '\n';
  return s.str();
}

ReferenceModel parse_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  ModelConfig config;
  std::vector<double> shift, scale, params;
  long long num_params = -1;
  bool in_params = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (in_params) {
      params.push_back(io::parse_double(line, line_no));
      continue;
    }
    if (line == "params") {
      in_params = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "multiscore-model-1") throw ParseError("unknown checkpoint format", line_no);
    } else if (key == "input_dim") {
      config.input_dim = static_cast<std::size_t>(io::parse_int(value, line_no));
    } else if (key == "hidden_width") {
      config.hidden_width = static_cast<std::size_t>(io::parse_int(value, line_no));
    } else if (key == "dropout_rate") {
      config.dropout_rate = io::parse_double(value, line_no);
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "num_params") {
      num_params = io::parse_int(value, line_no);
    } else if (key == "shift") {
      shift.push_back(io::parse_double(value, line_no));
    } else if (key == "scale") {
      scale.push_back(io::parse_double(value, line_no));
    } else {
      throw ParseError("unknown checkpoint key " + key, line_no);
    }
  }
  validate_config(config);
  ReferenceModel m;
  m.config = config;
  if (static_cast<long long>(params.size()) != num_params ||
      params.size() != parameter_count(config) || shift.size() != config.input_dim ||
      scale.size() != config.input_dim) {
    throw ParseError("checkpoint sizes do not match its header", 0);
  }
  m.params = Eigen::Map<Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
  m.input_shift = Eigen::Map<Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
  m.input_scale = Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  return m;
}

}  // namespace multiscore
