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

#include "multiscore/stage.hpp"

#include <string>

#include "multiscore/errors.hpp"

namespace multiscore {

SleepStage stage_from_index(std::size_t k) {
  if (k >= kNumClasses) throw ValidationError("class index out of range: " + std::to_string(k));
  return kClassStages[k];
}

std::string_view to_string(SleepStage s) noexcept {
  switch (s) {
    case SleepStage::W: return "W";
    case SleepStage::N1: return "N1";
    case SleepStage::N2: return "N2";
    case SleepStage::N3: return "N3";
    case SleepStage::R: return "R";
    case SleepStage::NC: return "NC";
  }
  return "NC";
}

SleepStage parse_stage(std::string_view token, std::size_t line) {
  if (token == "W") return SleepStage::W;
  if (token == "N1") return SleepStage::N1;
  if (token == "N2") return SleepStage::N2;
  if (token == "N3") return SleepStage::N3;
  if (token == "R") return SleepStage::R;
  if (token == "NC") return SleepStage::NC;
  throw ParseError("unknown stage token \"" + std::string(token) + "\"", line);
}

}  // namespace multiscore
