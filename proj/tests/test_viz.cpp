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

#include <doctest.h>

#include <filesystem>
#include <regex>
#include <vector>

#include "multiscore/errors.hpp"
#include "multiscore/io.hpp"
#include "multiscore/records.hpp"
#include "multiscore/viz.hpp"

using namespace multiscore;
using S = SleepStage;

namespace {

// Minimal well-formedness check: tags nest and close in order.
bool balanced_xml(const std::string& doc) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z][A-Za-z0-9]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[1].length() > 0) {
      if (stack.empty() || stack.back() != m[2].str()) return false;
      stack.pop_back();
    } else if (m[3].length() == 0) {
      stack.push_back(m[2].str());
    }
  }
  return stack.empty() && doc.find("<svg") != std::string::npos;
}

Eigen::MatrixXd density() {
  Eigen::MatrixXd v(4, 5);
  v << 0.6, 0.2, 0.2, 0, 0,  //
      0.2, 0.2, 0.2, 0.2, 0.2,  //
      0, 0, 1, 0, 0,  //
      0.1, 0.1, 0.1, 0.1, 0.6;
  return v;
}

}  // namespace

TEST_CASE("hypnogram segments merge runs and use minutes") {
  const Hypnogram h{"A", "consensus", {S::W, S::W, S::N1, S::N2, S::N2, S::N2, S::R}};
  const auto seg = hypnogram_segments(h);
  REQUIRE(seg.size() == 4);
  CHECK(seg[0].stage == S::W);
  CHECK(seg[0].start_minute == 0.0);
  CHECK(seg[0].end_minute == 1.0);
  CHECK(seg[2].stage == S::N2);
  CHECK(seg[2].start_minute == 1.5);
  CHECK(seg[2].end_minute == 3.0);
  CHECK(seg[3].end_minute == 3.5);
  CHECK(hypnogram_segments({"A", "c", {}}).empty());
}

TEST_CASE("stacked bounds follow the display order") {
  const auto b = stacked_bounds(density());
  REQUIRE(b.cols() == 6);
  for (Eigen::Index t = 0; t < b.rows(); ++t) {
    CHECK(b(t, 0) == 0.0);
    CHECK(std::abs(b(t, 5) - 1.0) <= 1e-12);
    for (Eigen::Index i = 1; i < 6; ++i) CHECK(b(t, i) >= b(t, i - 1));
  }
  // Display order W, R, N1, N2, N3: the first band is W, the second R.
  CHECK(b(0, 1) == 0.6);
  CHECK(b(3, 2) == doctest::Approx(0.7));
}

TEST_CASE("SVG output is well formed") {
  const Hypnogram h{"A&B", "consensus", {S::W, S::N1, S::N2, S::N3, S::R, S::R}};
  const auto svg = render_hypnogram_svg(h);
  CHECK(balanced_xml(svg));
  CHECK(svg.find("A&amp;B") != std::string::npos);
  CHECK_THROWS_AS(render_hypnogram_svg({"A", "c", {S::W, S::NC}}), ValidationError);

  const HypnodensitySeries series{"S001", DensitySource::model_probs, density()};
  const auto plain = render_hypnodensity_svg(series);
  CHECK(balanced_xml(plain));
  CHECK(plain.find("ACS=") == std::string::npos);
  const auto titled = render_hypnodensity_svg(series, density());
  CHECK(titled.find("ACS=1.000") != std::string::npos);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    CHECK(titled.find(std::string(stage_color(k))) != std::string::npos);
  }

  auto bad = series;
  bad.values(1, 1) = 0.5;
  CHECK_THROWS_AS(render_hypnodensity_svg(bad), ValidationError);
}

TEST_CASE("emitted hypnodensity table round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "multiscore_test_viz";
  std::filesystem::create_directories(dir);
  const HypnodensitySeries series{"S002", DensitySource::soft_consensus, density()};
  const auto table = emit_hypnodensity(series, dir / "S002.svg");
  CHECK(table == dir / "S002.csv");
  CHECK(std::filesystem::exists(dir / "S002.svg"));
  CHECK(parse_distribution_table(io::read_file(table)) == density());
  emit_hypnogram({"S002", "consensus", {S::W, S::N2}}, dir / "hyp.svg");
  CHECK(balanced_xml(io::read_file(dir / "hyp.svg")));
  std::filesystem::remove_all(dir);
}
