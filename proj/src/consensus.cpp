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

#include "multiscore/consensus.hpp"

#include <algorithm>
#include <string>

#include "multiscore/errors.hpp"

namespace multiscore {

StageDistribution SoftConsensusMatrix::row(std::size_t t) const {
  StageDistribution r{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    r[k] = values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
  }
  return r;
}

std::array<std::size_t, kNumClasses> vote_counts(const std::vector<SleepStage>& labels) {
  std::array<std::size_t, kNumClasses> counts{};
  for (const SleepStage s : labels) {
    if (const auto k = class_index(s)) ++counts[*k];
  }
  return counts;
}

namespace {

void require_scorer(const MultiScoredRecord& record, std::size_t j) {
  if (record.num_scorers() < 2) {
    throw UndefinedAgreementError(record.subject_id + ": Soft-Agreement needs at least two scorers");
  }
  if (j >= record.num_scorers()) {
    throw ValidationError(record.subject_id + ": scorer index " + std::to_string(j) +
                          " out of range");
  }
}

}  // namespace

LeaveOneOutConsensus leave_one_out_consensus(const MultiScoredRecord& record, std::size_t j) {
  require_scorer(record, j);
  LeaveOneOutConsensus out;
  out.scorer_id = record.scorer_ids[j];
  for (const std::size_t t : record.retained_epochs()) {
    std::array<std::size_t, kNumClasses> counts{};
    for (std::size_t i = 0; i < record.num_scorers(); ++i) {
      if (i == j) continue;
      if (const auto k = class_index(record.annotations[i][t])) ++counts[*k];
    }
    const std::size_t max_count = *std::max_element(counts.begin(), counts.end());
    StageDistribution row{};
    if (max_count > 0) {
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        row[k] = static_cast<double>(counts[k]) / static_cast<double>(max_count);
      }
    }
    out.rows.push_back(row);
    out.empty_rows.push_back(max_count == 0);
  }
  return out;
}

double soft_agreement(const MultiScoredRecord& record, std::size_t j) {
  const LeaveOneOutConsensus z = leave_one_out_consensus(record, j);
  const auto epochs = record.retained_epochs();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < epochs.size(); ++r) {
    const auto k = class_index(record.annotations[j][epochs[r]]);
    if (!k || z.empty_rows[r]) continue;
    sum += z.rows[r][*k];
    ++n;
  }
  if (n == 0) {
    throw UndefinedAgreementError(record.subject_id + ": scorer " + record.scorer_ids[j] +
                                  " has no epoch comparable with the other scorers");
  }
  return sum / static_cast<double>(n);
}

ScorerRanking rank_scorers(const MultiScoredRecord& record) {
  ScorerRanking ranking;
  ranking.subject_id = record.subject_id;
  for (std::size_t j = 0; j < record.num_scorers(); ++j) {
    ranking.entries.push_back({j, record.scorer_ids[j], soft_agreement(record, j)});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const ScorerScore& a, const ScorerScore& b) {
                     return a.soft_agreement > b.soft_agreement;
                   });
  return ranking;
}

ConsensusHypnogram majority_vote(const MultiScoredRecord& record, const ScorerRanking& ranking) {
  validate(record);
  if (ranking.entries.size() != record.num_scorers()) {
    throw ValidationError(record.subject_id + ": ranking does not cover every scorer");
  }
  ConsensusHypnogram out;
  out.subject_id = record.subject_id;
  for (const std::size_t t : record.retained_epochs()) {
    const auto counts = vote_counts(record.epoch_labels(t));
    const std::size_t best = *std::max_element(counts.begin(), counts.end());
    const auto tied = std::count(counts.begin(), counts.end(), best);
    if (tied == 1) {
      const auto k = static_cast<std::size_t>(std::find(counts.begin(), counts.end(), best) -
                                              counts.begin());
      out.stages.push_back(kClassStages[k]);
      out.tiebreak_flags.push_back(false);
      continue;
    }
    bool resolved = false;
    for (const auto& entry : ranking.entries) {
      const auto k = class_index(record.annotations.at(entry.scorer_index)[t]);
      if (k && counts[*k] == best) {
        out.stages.push_back(kClassStages[*k]);
        out.tiebreak_flags.push_back(true);
        resolved = true;
        break;
      }
    }
    if (!resolved) {
      throw InternalError(record.subject_id + ": tie at epoch " + std::to_string(t) +
                          " not resolvable from the ranking");
    }
  }
  return out;
}

SoftConsensusMatrix soft_consensus(const MultiScoredRecord& record) {
  validate(record);
  const auto epochs = record.retained_epochs();
  SoftConsensusMatrix out;
  out.subject_id = record.subject_id;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(epochs.size()), kNumClasses);
  for (std::size_t r = 0; r < epochs.size(); ++r) {
    const auto counts = vote_counts(record.epoch_labels(epochs[r]));
    std::size_t m = 0;
    for (const auto c : counts) m += c;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          static_cast<double>(counts[k]) / static_cast<double>(m);
    }
  }
  return out;
}

std::string serialize_consensus(const std::vector<ConsensusHypnogram>& hypnograms) {
  std::string s = "subject,epoch,stage,tiebreak\n";
  for (const auto& h : hypnograms) {
    for (std::size_t t = 0; t < h.stages.size(); ++t) {
      s += h.subject_id + ',' + std::to_string(t) + ',';
      s += to_string(h.stages[t]);
      s += h.tiebreak_flags[t] ? ",1\n" : ",0\n";
    }
  }
  return s;
}

}  // namespace multiscore
