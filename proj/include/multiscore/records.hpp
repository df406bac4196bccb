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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "multiscore/stage.hpp"

namespace multiscore {

/// One scorer's stage sequence for one night, 30 s per epoch.
struct Hypnogram {
  std::string subject_id;
  std::string scorer_id;
  std::vector<SleepStage> stages;
};

/// J scorers' annotations over T epochs of one subject.
///
/// `annotations[j][t]` is scorer j's label at epoch t. `epoch_mask[t]` is
/// true for epochs kept for analysis; downstream matrices have one row per
/// retained epoch, in epoch order.
struct MultiScoredRecord {
  std::string subject_id;
  std::vector<std::string> scorer_ids;
  std::vector<std::vector<SleepStage>> annotations;
  std::vector<bool> epoch_mask;

  std::size_t num_epochs() const noexcept { return epoch_mask.size(); }
  std::size_t num_scorers() const noexcept { return annotations.size(); }
  std::size_t retained_count() const noexcept;
  /// Indices of retained epochs in increasing order.
  std::vector<std::size_t> retained_epochs() const;
  /// The J labels at epoch t.
  std::vector<SleepStage> epoch_labels(std::size_t t) const;
  /// Number of non-NC labels at epoch t.
  std::size_t observation_count(std::size_t t) const;
};

/// Builds a record from per-scorer hypnograms. Throws AlignmentError when
/// lengths differ and ValidationError when empty or mixed subjects.
MultiScoredRecord make_record(const std::vector<Hypnogram>& hypnograms);

/// Throws ValidationError if a retained epoch has no scored label or the
/// grid is ragged.
void validate(const MultiScoredRecord& record);

/// Per-epoch feature vectors of one subject, one row per retained epoch.
struct FeatureMatrix {
  std::string subject_id;
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Parses a label table `subject,epoch,<scorer>...`. Rows of a subject must
/// be contiguous with consecutive epoch numbers. An empty cell means that
/// scorer's hypnogram ended early and raises AlignmentError.
std::vector<MultiScoredRecord> parse_labels(std::string_view text);

std::string serialize_labels(const std::vector<MultiScoredRecord>& records);

/// Masks out epochs where every scorer gave NC. Idempotent.
MultiScoredRecord drop_unclassified(const MultiScoredRecord& record);

/// Parses a feature table `subject,epoch,<feature>...`. Throws ParseError on
/// non-numeric cells and ValidationError on NaN or infinity.
std::vector<FeatureMatrix> parse_features(std::string_view text);

std::string serialize_features(const std::vector<FeatureMatrix>& features);

/// Throws AlignmentError unless features has one row per retained epoch.
void check_alignment(const FeatureMatrix& features, const MultiScoredRecord& record);

/// Single-sequence table `subject,epoch,stage` used for consensus and latent
/// hypnograms.
std::string serialize_hypnograms(const std::vector<Hypnogram>& hypnograms);
std::vector<Hypnogram> parse_hypnograms(std::string_view text);

/// T×K probability table `subject,epoch,W,N1,N2,N3,R`.
std::string serialize_distribution_table(std::string_view subject_id,
                                         const Eigen::MatrixXd& rows);
Eigen::MatrixXd parse_distribution_table(std::string_view text);

}  // namespace multiscore
