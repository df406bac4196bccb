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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>
#include <array>

#include <Eigen/Core>

#include "multiscore/records.hpp"

namespace multiscore {

enum class DensitySource { soft_consensus, model_probs };

std::string_view to_string(DensitySource source) noexcept;

/// Per-epoch stage distribution of one night.
struct HypnodensitySeries {
  std::string subject_id;
  DensitySource source = DensitySource::soft_consensus;
  Eigen::MatrixXd values;
};

/// Fill colour per class index.
std::string_view stage_color(std::size_t class_index) noexcept;

/// Stack order of the hypnodensity bands and hypnogram levels, top first.
inline constexpr std::array<SleepStage, kNumClasses> kDisplayOrder = {
    SleepStage::W, SleepStage::R, SleepStage::N1, SleepStage::N2, SleepStage::N3};

/// A run of identical stages in minutes from the start of the night.
struct StageSegment {
  double start_minute = 0.0;
  double end_minute = 0.0;
  SleepStage stage = SleepStage::W;
};

std::vector<StageSegment> hypnogram_segments(const Hypnogram& hypnogram);

/// T×(K+1) band boundaries measured from the top: column 0 is 0, column i is
/// the cumulative mass of the first i stages of kDisplayOrder.
Eigen::MatrixXd stacked_bounds(const Eigen::MatrixXd& values);

/// Step-plot SVG; levels W, R, N1, N2, N3 from top, x axis in minutes.
/// Throws ValidationError on NC stages.
std::string render_hypnogram_svg(const Hypnogram& hypnogram);
void emit_hypnogram(const Hypnogram& hypnogram, const std::filesystem::path& destination);

/// Stacked-area SVG, bands W, R, N1, N2, N3 from top. When `reference` is
/// given the title carries its ACS against the series.
std::string render_hypnodensity_svg(const HypnodensitySeries& series,
                                    const std::optional<Eigen::MatrixXd>& reference = {});

/// Writes the SVG and a companion `<stem>.csv` with the raw values. Returns
/// the path of the table. Throws ValidationError for non-stochastic rows.
std::filesystem::path emit_hypnodensity(const HypnodensitySeries& series,
                                        const std::filesystem::path& destination,
                                        const std::optional<Eigen::MatrixXd>& reference = {});

}  // namespace multiscore
