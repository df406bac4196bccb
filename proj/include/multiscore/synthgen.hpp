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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multiscore/records.hpp"

namespace multiscore {

/// 5×5 row-stochastic matrix indexed by class.
using StochasticMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

/// Diagonal `diag`, remaining mass spread evenly off the diagonal.
StochasticMatrix symmetric_confusion(double diag);

/// Synthetic cohort description. Latent hypnograms follow a first-order
/// Markov chain; each scorer relabels the latent stage through its own
/// confusion matrix; features are the latent class mean plus isotropic
/// Gaussian noise.
struct GeneratorSpec {
  std::size_t subjects = 40;
  std::size_t epochs = 960;
  std::size_t scorers = 5;
  StochasticMatrix transition{};
  /// One confusion matrix per scorer (rows = latent stage).
  std::vector<StochasticMatrix> confusions;
  std::size_t feature_dim = 8;
  /// kNumClasses × feature_dim.
  Eigen::MatrixXd class_means;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

/// Default cohort: 40 subjects, 960 epochs, 5 scorers, 8 features.
GeneratorSpec default_spec(std::uint64_t seed = 0);

/// Class mean k is `separation` times the unit vector on axis k mod D.
Eigen::MatrixXd axis_class_means(std::size_t feature_dim, double separation);

/// Throws ValidationError on a malformed spec.
void validate(const GeneratorSpec& spec);

std::string subject_name(std::size_t subject_index);

/// Markov chain starting in W; deterministic in (seed, subject index).
Hypnogram gen_latent_hypnogram(const GeneratorSpec& spec, std::size_t subject_index);

/// Independent per-epoch, per-scorer draws from the confusion rows.
/// `subject_index` selects the random stream.
MultiScoredRecord gen_scorer_labels(const Hypnogram& latent, const GeneratorSpec& spec,
                                    std::size_t subject_index);

FeatureMatrix gen_features(const Hypnogram& latent, const GeneratorSpec& spec,
                           std::size_t subject_index);

struct SyntheticSubject {
  Hypnogram latent;
  MultiScoredRecord record;
  FeatureMatrix features;
};

SyntheticSubject generate_subject(const GeneratorSpec& spec, std::size_t subject_index);
std::vector<SyntheticSubject> generate_cohort(const GeneratorSpec& spec);

/// Mean Soft-Agreement over every scorer of every record.
double mean_soft_agreement(const std::vector<MultiScoredRecord>& records);

struct CalibrationOutcome {
  GeneratorSpec spec;
  double diagonal = 1.0;
  double achieved = 1.0;
};

/// Bisects the shared confusion diagonal until the mean Soft-Agreement of a
/// pilot cohort (`pilot_subjects` subjects, template T and J) is within
/// `tolerance` of `target`. Throws ValidationError unless target lies in
/// (0.3, 1] and CalibrationError with the achieved bracket when unreachable.
CalibrationOutcome calibrate_agreement(double target, const GeneratorSpec& templ,
                                       std::size_t pilot_subjects = 10,
                                       double tolerance = 0.02);

}  // namespace multiscore
