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
#include <vector>

#include <Eigen/Core>

#include "multiscore/records.hpp"

namespace multiscore {

/// Scorer j's view of the remaining J-1 scorers: per retained epoch, stage
/// vote counts divided by the largest count, so majority and tied stages
/// score 1.
struct LeaveOneOutConsensus {
  std::string scorer_id;
  std::vector<StageDistribution> rows;
  /// Set where no other scorer gave a stage; that row is all zeros.
  std::vector<bool> empty_rows;
};

struct ScorerScore {
  std::size_t scorer_index = 0;
  std::string scorer_id;
  double soft_agreement = 0.0;
};

/// Scorers by decreasing Soft-Agreement; equal values keep index order.
struct ScorerRanking {
  std::string subject_id;
  std::vector<ScorerScore> entries;

  const ScorerScore& top() const { return entries.front(); }
};

/// Empirical vote distribution per retained epoch (T×K, rows sum to 1).
struct SoftConsensusMatrix {
  std::string subject_id;
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  StageDistribution row(std::size_t t) const;
};

/// Majority-vote hypnogram over retained epochs.
struct ConsensusHypnogram {
  std::string subject_id;
  std::vector<SleepStage> stages;
  /// True where the vote was tied and the ranking decided.
  std::vector<bool> tiebreak_flags;
};

LeaveOneOutConsensus leave_one_out_consensus(const MultiScoredRecord& record, std::size_t j);

/// Mean of the leave-one-out consensus at scorer j's own choice, over
/// retained epochs where j gave a stage and at least one other scorer did.
/// Throws UndefinedAgreementError when no such epoch exists.
double soft_agreement(const MultiScoredRecord& record, std::size_t j);

ScorerRanking rank_scorers(const MultiScoredRecord& record);

ConsensusHypnogram majority_vote(const MultiScoredRecord& record, const ScorerRanking& ranking);

SoftConsensusMatrix soft_consensus(const MultiScoredRecord& record);

/// Stage counts of a label list with NC ignored.
std::array<std::size_t, kNumClasses> vote_counts(const std::vector<SleepStage>& labels);

/// `subject,epoch,stage,tiebreak` table.
std::string serialize_consensus(const std::vector<ConsensusHypnogram>& hypnograms);

}  // namespace multiscore
