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

#include "multiscore/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multiscore/errors.hpp"

namespace multiscore {

std::string_view to_string(SmoothingMode mode) noexcept {
  switch (mode) {
    case SmoothingMode::none: return "none";
    case SmoothingMode::uniform: return "uniform";
    case SmoothingMode::soft_consensus: return "soft_consensus";
  }
  return "none";
}

StageDistribution one_hot(std::size_t class_index) {
  if (class_index >= kNumClasses) throw ValidationError("class index out of range");
  StageDistribution v{};
  v[class_index] = 1.0;
  return v;
}

SmoothedTarget hard_target(std::size_t class_index) {
  return {one_hot(class_index), 0.0, SmoothingMode::none};
}

bool is_probability_vector(const StageDistribution& v, double tol) {
  double sum = 0.0;
  for (const double x : v) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

namespace {

void require_one_hot(const StageDistribution& v) {
  std::size_t ones = 0;
  for (const double x : v) {
    if (x == 1.0) {
      ++ones;
    } else if (x != 0.0) {
      throw ValidationError("target is not one-hot");
    }
  }
  if (ones != 1) throw ValidationError("target is not one-hot");
}

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("smoothing weight must lie in [0, 1], got " + std::to_string(alpha));
  }
}

StageDistribution mix(const StageDistribution& hard, double alpha, const StageDistribution& soft) {
  StageDistribution out{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out[k] = hard[k] == soft[k] ? hard[k] : hard[k] * (1.0 - alpha) + alpha * soft[k];
  }
  return out;
}

}  // namespace

SmoothedTarget uniform_smooth(const StageDistribution& onehot, double alpha) {
  require_one_hot(onehot);
  require_alpha(alpha);
  StageDistribution uniform;
  uniform.fill(1.0 / static_cast<double>(kNumClasses));
  return {mix(onehot, alpha, uniform), alpha, SmoothingMode::uniform};
}

SmoothedTarget sc_smooth(const StageDistribution& onehot, double alpha,
                         const StageDistribution& sc_row) {
  require_one_hot(onehot);
  require_alpha(alpha);
  if (!is_probability_vector(sc_row, 1e-9)) {
    throw ValidationError("soft-consensus row is not a probability vector");
  }
  return {mix(onehot, alpha, sc_row), alpha, SmoothingMode::soft_consensus};
}

double cross_entropy(const StageDistribution& target, const StageDistribution& probs) {
  double loss = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (target[k] == 0.0) continue;
    loss -= target[k] * std::log(std::clamp(probs[k], kLogClamp, 1.0));
  }
  return loss;
}

StageDistribution softmax(const StageDistribution& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  StageDistribution p{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (auto& x : p) x /= sum;
  return p;
}

StageDistribution cross_entropy_grad(const StageDistribution& target,
                                     const StageDistribution& logits) {
  StageDistribution g = softmax(logits);
  for (std::size_t k = 0; k < kNumClasses; ++k) g[k] -= target[k];
  return g;
}

}  // namespace multiscore
