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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "multiscore/consensus.hpp"
#include "multiscore/metrics.hpp"
#include "multiscore/model.hpp"
#include "multiscore/records.hpp"

namespace multiscore {

/// Training arm: consensus one-hot targets, uniform smoothing, or
/// soft-consensus smoothing.
enum class Arm { base, ls_u, ls_sc };

std::string_view to_string(Arm arm) noexcept;
/// Accepts `base`, `ls_u`, `ls_sc` and the display names.
Arm parse_arm(std::string_view name);

/// Smoothing grid of an arm: {0.1..0.5} for ls_u, {0.1..1.0} for ls_sc.
std::vector<double> alpha_grid(Arm arm);

/// A subject ready for experiments: NC-only epochs dropped, features aligned,
/// and its own ranking, consensus and soft-consensus computed.
struct SubjectData {
  MultiScoredRecord record;
  FeatureMatrix features;
  ScorerRanking ranking;
  ConsensusHypnogram consensus;
  SoftConsensusMatrix soft;
};

SubjectData prepare_subject(const MultiScoredRecord& record, const FeatureMatrix& features);

/// Pairs records and features by subject id. Throws AlignmentError when a
/// subject is missing from either side.
std::vector<SubjectData> prepare_dataset(const std::vector<MultiScoredRecord>& records,
                                         const std::vector<FeatureMatrix>& features);

/// Concatenates each epoch's features with those of `context` neighbours on
/// both sides; edges repeat the first or last epoch.
Eigen::MatrixXd context_inputs(const Eigen::MatrixXd& features, std::size_t context);

/// Per-epoch training targets of one subject for an arm.
Eigen::MatrixXd build_targets(const SubjectData& subject, Arm arm, double alpha);

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct FoldPlan {
  std::size_t k = 0;
  std::vector<Fold> folds;
};

/// Shuffled subject-level split. For k >= 2 the test sets partition the
/// cohort: each fold gets `test_count` subjects and the remainder goes one
/// per fold from the first. For k = 1 a single hold-out of `test_count`.
/// Validation subjects are drawn from each fold's non-test remainder.
/// Throws ConfigError on infeasible counts.
FoldPlan make_folds(std::vector<std::string> subject_ids, std::size_t k, std::size_t val_count,
                    std::size_t test_count, std::uint64_t seed);

/// Throws InternalError if a fold reuses a subject across roles or (k >= 2)
/// the test sets do not cover every subject exactly once.
void check_fold_plan(const FoldPlan& plan, const std::vector<std::string>& subject_ids);

struct ExperimentConfig {
  Arm arm = Arm::base;
  /// Ignored for the base arm.
  double alpha = 0.0;
  std::size_t hidden_width = 32;
  double dropout_rate = 0.3;
  std::size_t context = 1;
  TrainConfig train;
  std::size_t ece_bins = kDefaultEceBins;
  /// 0 disables the MC-dropout evaluation.
  std::size_t mc_passes = 0;
  std::uint64_t seed = 0;
};

/// Throws ConfigError when alpha lies outside the arm's range.
void validate(const ExperimentConfig& config);

struct FoldOutcome {
  std::size_t index = 0;
  TrainHistory history;
  double best_val_macro_f1 = 0.0;
  std::string error;
};

struct ArmResult {
  Arm arm = Arm::base;
  double alpha = 0.0;
  /// Test-subject rows pooled over folds, sorted by subject id.
  std::vector<SubjectMetrics> rows;
  /// Same with MC-dropout predictions; empty unless enabled.
  std::vector<SubjectMetrics> mc_rows;
  std::vector<FoldOutcome> folds;

  std::size_t failed_folds() const;
  double mean_val_macro_f1() const;
};

/// Optional hook receiving each test subject's deterministic probabilities.
using PredictionSink =
    std::function<void(const SubjectData&, const Eigen::MatrixXd& probs)>;

/// Trains and evaluates one arm over every fold. Errors in a fold are
/// recorded in its FoldOutcome and the remaining folds still run.
ArmResult run_arm(const std::vector<SubjectData>& dataset, const ExperimentConfig& config,
                  const FoldPlan& plan, const PredictionSink& sink = {});

struct GridPoint {
  double alpha = 0.0;
  ArmResult result;
};

struct GridSearchResult {
  double best_alpha = 0.0;
  std::size_t best_index = 0;
  std::vector<GridPoint> points;
};

/// Like PredictionSink, with the index of the grid point being evaluated.
using GridPredictionSink =
    std::function<void(std::size_t point, const SubjectData&, const Eigen::MatrixXd& probs)>;

/// Runs every alpha of `grid` (the arm's default grid when empty) and picks
/// the one with the highest mean validation macro-F1; ties go to the
/// smaller alpha. Throws ConfigError for the base arm.
GridSearchResult grid_search_alpha(const std::vector<SubjectData>& dataset,
                                   const ExperimentConfig& config, const FoldPlan& plan,
                                   std::vector<double> grid = {},
                                   const GridPredictionSink& sink = {});

struct ReportRow {
  std::string model;
  std::optional<double> alpha;
  MetricsReport report;
};

/// Report table header line (without newline).
std::string report_header();
std::string format_report(const std::vector<ReportRow>& rows);

/// Writes the report table atomically. Throws ValidationError for no rows.
void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& destination);

using Manifest = std::vector<std::pair<std::string, std::string>>;

/// `key=value` lines preceded by `#` comment lines for provenance.
std::string format_manifest(const Manifest& entries, const std::vector<std::string>& comments);

/// Source revision baked in at build time, or "unknown".
std::string_view build_commit() noexcept;
std::string_view toolkit_version() noexcept;

}  // namespace multiscore
