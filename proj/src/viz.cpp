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

#include "multiscore/viz.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "multiscore/errors.hpp"
#include "multiscore/io.hpp"
#include "multiscore/metrics.hpp"

namespace multiscore {

namespace {

constexpr double kWidth = 960.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kPlotHeight = 200.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(double height, std::string_view title) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(kWidth) +
       "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(kWidth) + ' ' + num(height) +
       "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kLeft) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  return s;
}

// x axis with tick labels every hour (or every 10 minutes for short nights).
std::string time_axis(double minutes, double y) {
  const double plot_w = kWidth - kLeft - kRight;
  std::string s = "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" +
                  num(kLeft + plot_w) + "\" y2=\"" + num(y) + "\" stroke=\"black\"/>\n";
  const double step = minutes > 120.0 ? 60.0 : 10.0;
  for (double m = 0.0; m <= minutes + 1e-9; m += step) {
    const double x = kLeft + plot_w * (minutes > 0 ? m / minutes : 0.0);
    s += "<text x=\"" + num(x) + "\" y=\"" + num(y + 16) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" +
         std::to_string(static_cast<int>(m)) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(y + 32) +
       "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">minutes</text>\n";
  return s;
}

std::size_t display_row(SleepStage s) {
  for (std::size_t i = 0; i < kDisplayOrder.size(); ++i) {
    if (kDisplayOrder[i] == s) return i;
  }
  throw ValidationError("NC has no display level");
}

}  // namespace

std::string_view to_string(DensitySource source) noexcept {
  return source == DensitySource::soft_consensus ? "soft_consensus" : "model_probs";
}

std::string_view stage_color(std::size_t class_index) noexcept {
  static constexpr std::array<std::string_view, kNumClasses> colors = {
      "#f2c14e",  // W
      "#8ecae6",  // N1
      "#219ebc",  // N2
      "#023047",  // N3
      "#e76f51",  // R
  };
  return class_index < colors.size() ? colors[class_index] : "#999999";
}

std::vector<StageSegment> hypnogram_segments(const Hypnogram& hypnogram) {
  std::vector<StageSegment> out;
  const double epoch_minutes = kEpochSeconds / 60.0;
  for (std::size_t t = 0; t < hypnogram.stages.size(); ++t) {
    const SleepStage s = hypnogram.stages[t];
    if (!is_scored(s)) throw ValidationError("hypnogram contains NC at epoch " + std::to_string(t));
    const double start = static_cast<double>(t) * epoch_minutes;
    if (!out.empty() && out.back().stage == s) {
      out.back().end_minute = start + epoch_minutes;
    } else {
      out.push_back({start, start + epoch_minutes, s});
    }
  }
  return out;
}

std::string render_hypnogram_svg(const Hypnogram& hypnogram) {
  const auto segments = hypnogram_segments(hypnogram);
  const double minutes = segments.empty() ? 0.0 : segments.back().end_minute;
  const double height = kTop + kPlotHeight + kBottom;
  const double plot_w = kWidth - kLeft - kRight;
  const double level_gap = kPlotHeight / static_cast<double>(kNumClasses - 1);
  auto x_of = [&](double m) { return kLeft + plot_w * (minutes > 0 ? m / minutes : 0.0); };
  auto y_of = [&](SleepStage s) { return kTop + level_gap * static_cast<double>(display_row(s)); };

  std::string s = svg_open(height, "Hypnogram " + hypnogram.subject_id);
  for (const SleepStage st : kDisplayOrder) {
    s += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y_of(st) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
         std::string(to_string(st)) + "</text>\n";
  }
  if (!segments.empty()) {
    s += "<path fill=\"none\" stroke=\"black\" stroke-width=\"1.2\" d=\"M" +
         num(x_of(segments.front().start_minute)) + ' ' + num(y_of(segments.front().stage));
    for (const auto& seg : segments) {
      s += " V" + num(y_of(seg.stage)) + " H" + num(x_of(seg.end_minute));
    }
    s += "\"/>\n";
  }
  s += time_axis(minutes, kTop + kPlotHeight + 6);
  s += "</svg>\n";
  return s;
}

void emit_hypnogram(const Hypnogram& hypnogram, const std::filesystem::path& destination) {
  io::write_file_atomic(destination, render_hypnogram_svg(hypnogram));
}

Eigen::MatrixXd stacked_bounds(const Eigen::MatrixXd& values) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(values.rows(), kNumClasses + 1);
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      const auto k = static_cast<Eigen::Index>(*class_index(kDisplayOrder[i]));
      b(t, static_cast<Eigen::Index>(i) + 1) = b(t, static_cast<Eigen::Index>(i)) + values(t, k);
    }
  }
  return b;
}

namespace {

void require_series(const HypnodensitySeries& series) {
  if (series.values.cols() != static_cast<Eigen::Index>(kNumClasses)) {
    throw ValidationError("hypnodensity needs 5 columns");
  }
  for (Eigen::Index t = 0; t < series.values.rows(); ++t) {
    const double sum = series.values.row(t).sum();
    if (std::abs(sum - 1.0) > 1e-9 || (series.values.row(t).array() < 0.0).any()) {
      throw ValidationError("hypnodensity row " + std::to_string(t) + " is not a distribution");
    }
  }
}

}  // namespace

std::string render_hypnodensity_svg(const HypnodensitySeries& series,
                                    const std::optional<Eigen::MatrixXd>& reference) {
  require_series(series);
  const Eigen::Index T = series.values.rows();
  const double epoch_minutes = kEpochSeconds / 60.0;
  const double minutes = static_cast<double>(T) * epoch_minutes;
  const double height = kTop + kPlotHeight + kBottom + 24;
  const double plot_w = kWidth - kLeft - kRight;
  auto x_of = [&](double m) { return kLeft + plot_w * (minutes > 0 ? m / minutes : 0.0); };
  auto y_of = [&](double frac) { return kTop + kPlotHeight * frac; };

  std::string title = "Hypnodensity " + series.subject_id + " (" +
                      std::string(to_string(series.source)) + ")";
  if (reference) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " ACS=%.3f", acs(*reference, series.values));
    title += buf;
  }
  std::string s = svg_open(height, title);
  const Eigen::MatrixXd bounds = stacked_bounds(series.values);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const auto k = *class_index(kDisplayOrder[i]);
    std::string d;
    for (Eigen::Index t = 0; t < T; ++t) {
      const double y = y_of(bounds(t, static_cast<Eigen::Index>(i)));
      d += (t == 0 ? "M" : " L") + num(x_of(static_cast<double>(t) * epoch_minutes)) + ' ' + num(y);
      d += " L" + num(x_of(static_cast<double>(t + 1) * epoch_minutes)) + ' ' + num(y);
    }
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const double y = y_of(bounds(t, static_cast<Eigen::Index>(i) + 1));
      d += " L" + num(x_of(static_cast<double>(t + 1) * epoch_minutes)) + ' ' + num(y);
      d += " L" + num(x_of(static_cast<double>(t) * epoch_minutes)) + ' ' + num(y);
    }
    if (T > 0) {
      s += "<path fill=\"" + std::string(stage_color(k)) + "\" stroke=\"none\" d=\"" + d +
           " Z\"/>\n";
    }
  }
  // Legend.
  double lx = kLeft;
  const double ly = kTop + kPlotHeight + kBottom + 10;
  for (const SleepStage st : kDisplayOrder) {
    s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 9) + "\" width=\"10\" height=\"10\" fill=\"" +
         std::string(stage_color(*class_index(st))) + "\"/>\n";
    s += "<text x=\"" + num(lx + 14) + "\" y=\"" + num(ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + std::string(to_string(st)) +
         "</text>\n";
    lx += 50;
  }
  s += time_axis(minutes, kTop + kPlotHeight + 6);
  s += "</svg>\n";
  return s;
}

std::filesystem::path emit_hypnodensity(const HypnodensitySeries& series,
                                        const std::filesystem::path& destination,
                                        const std::optional<Eigen::MatrixXd>& reference) {
  const std::string svg = render_hypnodensity_svg(series, reference);
  auto table = destination;
  table.replace_extension(".csv");
  io::write_file_atomic(destination, svg);
  io::write_file_atomic(table, serialize_distribution_table(series.subject_id, series.values));
  return table;
}

}  // namespace multiscore
