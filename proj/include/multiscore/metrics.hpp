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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "multiscore/stage.hpp"

namespace multiscore {

/// K×K counts, rows = true label, columns = predicted label.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t total() const noexcept;
};

struct ClassificationScores {
  double accuracy = 0.0;
  StageDistribution per_class_f1{};
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double kappa = 0.0;
};

struct CalibrationBin {
  std::size_t count = 0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

/// Equal-width bins over (0, 1]; bin m covers ((m-1)/M, m/M].
struct CalibrationBins {
  std::vector<CalibrationBin> bins;
  std::size_t total = 0;
};

struct CalibrationResult {
  double ece = 0.0;
  CalibrationBins bins;
};

inline constexpr std::size_t kDefaultEceBins = 10;

/// Throws ValidationError on length mismatch or NC labels.
ConfusionMatrix confusion(std::span<const SleepStage> truth, std::span<const SleepStage> predicted);

/// Accuracy, F1 per class, macro and support-weighted F1, Cohen's kappa.
/// A class absent from both truth and prediction has F1 = 0 and still
/// counts in the macro mean. Throws ValidationError on an empty matrix.
ClassificationScores classification_scores(const ConfusionMatrix& cm);

/// Bin index in [0, M) of a confidence in (0, 1] (values <= 0 go to bin 0).
std::size_t calibration_bin(double confidence, std::size_t num_bins);

/// Expected calibration error of max-probability predictions against the
/// true labels. Throws ValidationError if num_bins < 1 or shapes disagree.
CalibrationResult ece(const Eigen::MatrixXd& probs, std::span<const SleepStage> truth,
                      std::size_t num_bins = kDefaultEceBins);

/// Mean of row maxima.
double mean_confidence(const Eigen::MatrixXd& probs);

/// Mean per-row cosine similarity of two T×K matrices. Throws
/// ValidationError on shape mismatch and InternalError on a zero row.
double acs(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& probs);

/// Row-wise argmax as stages.
std::vector<SleepStage> argmax_stages(const Eigen::MatrixXd& probs);

/// Metric columns in report order.
inline constexpr std::array<std::string_view, 12> kMetricNames = {
    "acc", "mf1", "kappa", "f1", "f1_W", "f1_N1", "f1_N2", "f1_N3", "f1_R", "ece", "conf", "acs"};
inline constexpr std::size_t kNumMetrics = kMetricNames.size();

std::size_t metric_index(std::string_view name);

/// All metrics for one evaluated subject.
struct SubjectMetrics {
  std::string subject_id;
  ClassificationScores scores;
  double ece = 0.0;
  double conf = 0.0;
  double acs = 0.0;

  std::array<double, kNumMetrics> values() const;
};

/// Scores one subject's predictions against its consensus labels and
/// soft-consensus matrix.
SubjectMetrics evaluate_subject(std::string subject_id, const Eigen::MatrixXd& probs,
                                std::span<const SleepStage> consensus,
                                const Eigen::MatrixXd& soft_consensus,
                                std::size_t ece_bins = kDefaultEceBins);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

/// Per-subject rows with their across-subject mean and population std.
struct MetricsReport {
  std::vector<SubjectMetrics> subjects;
  std::array<MetricSummary, kNumMetrics> summary{};

  const MetricSummary& operator[](std::string_view name) const {
    return summary[metric_index(name)];
  }
};

/// Throws ValidationError when `subjects` is empty.
MetricsReport aggregate(std::vector<SubjectMetrics> subjects);

/// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero
/// differences are dropped; exact null distribution (midranks for ties)
/// when at most 25 non-zero differences remain, otherwise the normal
/// approximation with tie and continuity corrections. Returns 1 when every
/// difference is zero. Throws ValidationError unless sizes match and n >= 5.
double paired_test(std::span<const double> a, std::span<const double> b);

}  // namespace multiscore
