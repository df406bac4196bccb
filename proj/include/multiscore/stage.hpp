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
#include <optional>
#include <string_view>

namespace multiscore {

/// Number of scoreable sleep stages (W, N1, N2, N3, R).
inline constexpr std::size_t kNumClasses = 5;

/// Epoch length in seconds. Fixed by AASM epoching.
inline constexpr double kEpochSeconds = 30.0;

/// Sleep stage annotation. NC marks an unclassified (or missing) epoch and
/// has no class index.
enum class SleepStage : std::uint8_t { W = 0, N1 = 1, N2 = 2, N3 = 3, R = 4, NC = 5 };

inline constexpr std::array<SleepStage, kNumClasses> kClassStages = {
    SleepStage::W, SleepStage::N1, SleepStage::N2, SleepStage::N3, SleepStage::R};

/// Probability vector over the five classes, in class-index order.
using StageDistribution = std::array<double, kNumClasses>;

constexpr bool is_scored(SleepStage s) noexcept { return s != SleepStage::NC; }

/// Class index of a scored stage; empty for NC.
constexpr std::optional<std::size_t> class_index(SleepStage s) noexcept {
  if (s == SleepStage::NC) return std::nullopt;
  return static_cast<std::size_t>(s);
}

/// Stage for a class index in [0, kNumClasses).
SleepStage stage_from_index(std::size_t k);

std::string_view to_string(SleepStage s) noexcept;

/// Parses a case-sensitive stage token. Throws ParseError naming the token.
SleepStage parse_stage(std::string_view token, std::size_t line = 0);

}  // namespace multiscore
