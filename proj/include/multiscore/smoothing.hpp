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
#include <string_view>

#include "multiscore/stage.hpp"

namespace multiscore {

enum class SmoothingMode { none, uniform, soft_consensus };

std::string_view to_string(SmoothingMode mode) noexcept;

/// Training target for one epoch.
struct SmoothedTarget {
  StageDistribution values{};
  double alpha = 0.0;
  SmoothingMode mode = SmoothingMode::none;
};

/// Log arguments are clamped to at least this value.
inline constexpr double kLogClamp = 1e-12;

StageDistribution one_hot(std::size_t class_index);

/// Unsmoothed one-hot target.
SmoothedTarget hard_target(std::size_t class_index);

/// y(1-a) + a/K. Throws ValidationError if `onehot` is not one-hot or alpha
/// lies outside [0, 1].
SmoothedTarget uniform_smooth(const StageDistribution& onehot, double alpha);

/// y(1-a) + a*sc. Throws ValidationError if `onehot` is not one-hot, `sc_row`
/// is not a probability vector, or alpha lies outside [0, 1].
///
/// Entries where the one-hot already equals the consensus entry are copied
/// unchanged, so a=1 reproduces `sc_row` and a unanimous row reproduces
/// `onehot` bit for bit.
SmoothedTarget sc_smooth(const StageDistribution& onehot, double alpha,
                         const StageDistribution& sc_row);

/// -sum_k t_k log(max(p_k, eps)).
double cross_entropy(const StageDistribution& target, const StageDistribution& probs);
inline double cross_entropy(const SmoothedTarget& target, const StageDistribution& probs) {
  return cross_entropy(target.values, probs);
}

/// Numerically stable softmax.
StageDistribution softmax(const StageDistribution& logits);

/// d/dlogits of cross_entropy(target, softmax(logits)) = softmax - target.
StageDistribution cross_entropy_grad(const StageDistribution& target,
                                     const StageDistribution& logits);
inline StageDistribution cross_entropy_grad(const SmoothedTarget& target,
                                            const StageDistribution& logits) {
  return cross_entropy_grad(target.values, logits);
}

bool is_probability_vector(const StageDistribution& v, double tol = 1e-9);

}  // namespace multiscore
