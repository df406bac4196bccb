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

#include "multiscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "multiscore/errors.hpp"

namespace multiscore {

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::int64_t{0});
  return n;
}

ConfusionMatrix confusion(std::span<const SleepStage> truth, std::span<const SleepStage> predicted) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("confusion: " + std::to_string(truth.size()) + " true vs " +
                          std::to_string(predicted.size()) + " predicted labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = class_index(truth[i]);
    const auto p = class_index(predicted[i]);
    if (!t || !p) throw ValidationError("confusion: NC label at position " + std::to_string(i));
    ++cm.counts[*t][*p];
  }
  return cm;
}

ClassificationScores classification_scores(const ConfusionMatrix& cm) {
  const auto n = static_cast<double>(cm.total());
  if (n <= 0) throw ValidationError("classification_scores: empty confusion matrix");

  std::array<double, kNumClasses> row_sum{}, col_sum{};
  double diag = 0.0;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row_sum[i] += static_cast<double>(cm.counts[i][j]);
      col_sum[j] += static_cast<double>(cm.counts[i][j]);
    }
    diag += static_cast<double>(cm.counts[i][i]);
  }

  ClassificationScores s;
  s.accuracy = diag / n;
  double expected = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const double tp = static_cast<double>(cm.counts[k][k]);
    const double denom = row_sum[k] + col_sum[k];
    s.per_class_f1[k] = denom > 0 ? 2.0 * tp / denom : 0.0;
    s.macro_f1 += s.per_class_f1[k] / static_cast<double>(kNumClasses);
    s.weighted_f1 += s.per_class_f1[k] * row_sum[k] / n;
    expected += (row_sum[k] / n) * (col_sum[k] / n);
  }
  // Chance agreement of 1 means both raters used a single identical class.
  s.kappa = expected < 1.0 ? (s.accuracy - expected) / (1.0 - expected) : 1.0;
  return s;
}

std::size_t calibration_bin(double confidence, std::size_t num_bins) {
  const double M = static_cast<double>(num_bins);
  if (!(confidence > 0.0)) return 0;
  auto m = static_cast<std::size_t>(std::ceil(confidence * M));
  m = std::clamp<std::size_t>(m, 1, num_bins);
  // Snap to the exact interval ((m-1)/M, m/M] against rounding in c*M.
  while (m > 1 && confidence <= static_cast<double>(m - 1) / M) --m;
  while (m < num_bins && confidence > static_cast<double>(m) / M) ++m;
  return m - 1;
}

CalibrationResult ece(const Eigen::MatrixXd& probs, std::span<const SleepStage> truth,
                      std::size_t num_bins) {
  if (num_bins < 1) throw ValidationError("ece: need at least one bin");
  if (static_cast<std::size_t>(probs.rows()) != truth.size()) {
    throw ValidationError("ece: probability rows do not match labels");
  }
  CalibrationResult res;
  res.bins.bins.resize(num_bins);
  res.bins.total = truth.size();
  std::vector<double> correct(num_bins, 0.0), conf_sum(num_bins, 0.0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index pred = 0;
    const double c = probs.row(i).maxCoeff(&pred);
    const auto t = class_index(truth[static_cast<std::size_t>(i)]);
    if (!t) throw ValidationError("ece: NC label");
    const std::size_t b = calibration_bin(c, num_bins);
    ++res.bins.bins[b].count;
    conf_sum[b] += c;
    correct[b] += static_cast<std::size_t>(pred) == *t ? 1.0 : 0.0;
  }
  if (truth.empty()) return res;
  const auto n = static_cast<double>(truth.size());
  for (std::size_t b = 0; b < num_bins; ++b) {
    auto& bin = res.bins.bins[b];
    if (bin.count == 0) continue;
    const auto cnt = static_cast<double>(bin.count);
    bin.accuracy = correct[b] / cnt;
    bin.confidence = conf_sum[b] / cnt;
    res.ece += cnt / n * std::abs(bin.accuracy - bin.confidence);
  }
  return res;
}

double mean_confidence(const Eigen::MatrixXd& probs) {
  if (probs.rows() == 0) return 0.0;
  return probs.rowwise().maxCoeff().mean();
}

double acs(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& probs) {
  if (reference.rows() != probs.rows() || reference.cols() != probs.cols()) {
    throw ValidationError("acs: matrices have different shapes");
  }
  if (reference.rows() == 0) throw ValidationError("acs: no epochs");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    const double na = reference.row(i).norm();
    const double nb = probs.row(i).norm();
    if (na == 0.0 || nb == 0.0) throw InternalError("acs: zero-norm row " + std::to_string(i));
    sum += reference.row(i).dot(probs.row(i)) / (na * nb);
  }
  return sum / static_cast<double>(reference.rows());
}

std::vector<SleepStage> argmax_stages(const Eigen::MatrixXd& probs) {
  std::vector<SleepStage> out;
  out.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index k = 0;
    probs.row(i).maxCoeff(&k);
    out.push_back(kClassStages[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::size_t metric_index(std::string_view name) {
  const auto it = std::find(kMetricNames.begin(), kMetricNames.end(), name);
  if (it == kMetricNames.end()) throw ValidationError("unknown metric " + std::string(name));
  return static_cast<std::size_t>(it - kMetricNames.begin());
}

std::array<double, kNumMetrics> SubjectMetrics::values() const {
  return {scores.accuracy,        scores.macro_f1,        scores.kappa,
          scores.weighted_f1,     scores.per_class_f1[0], scores.per_class_f1[1],
          scores.per_class_f1[2], scores.per_class_f1[3], scores.per_class_f1[4],
          ece,                    conf,                   acs};
}

SubjectMetrics evaluate_subject(std::string subject_id, const Eigen::MatrixXd& probs,
                                std::span<const SleepStage> consensus,
                                const Eigen::MatrixXd& soft_consensus, std::size_t ece_bins) {
  SubjectMetrics m;
  m.subject_id = std::move(subject_id);
  const auto predicted = argmax_stages(probs);
  m.scores = classification_scores(confusion(consensus, predicted));
  m.ece = ece(probs, consensus, ece_bins).ece;
  m.conf = mean_confidence(probs);
  m.acs = acs(soft_consensus, probs);
  return m;
}

MetricsReport aggregate(std::vector<SubjectMetrics> subjects) {
  if (subjects.empty()) throw ValidationError("aggregate: no subjects");
  MetricsReport report;
  const auto n = static_cast<double>(subjects.size());
  for (std::size_t i = 0; i < kNumMetrics; ++i) {
    double mean = 0.0;
    for (const auto& s : subjects) mean += s.values()[i];
    mean /= n;
    double var = 0.0;
    for (const auto& s : subjects) {
      const double d = s.values()[i] - mean;
      var += d * d;
    }
    report.summary[i] = {mean, std::sqrt(var / n)};
  }
  report.subjects = std::move(subjects);
  return report;
}

namespace {

// Midranks of |d|, doubled so ties stay integral.
std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_diff) {
  const std::size_t n = abs_diff.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_diff[a] < abs_diff[b]; });
  std::vector<std::int64_t> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_diff[order[j + 1]] == abs_diff[order[i]]) ++j;
    // Positions i..j share rank ((i+1)+(j+1))/2; doubled: i+j+2.
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = static_cast<std::int64_t>(i + j + 2);
    i = j + 1;
  }
  return ranks;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double paired_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired_test: samples differ in length");
  if (a.size() < 5) throw ValidationError("paired_test: need at least 5 pairs");

  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diff.push_back(d);
  }
  if (diff.empty()) return 1.0;

  std::vector<double> abs_diff(diff.size());
  std::transform(diff.begin(), diff.end(), abs_diff.begin(), [](double d) { return std::abs(d); });
  const auto ranks = doubled_ranks(abs_diff);
  std::int64_t w_plus = 0, total = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    total += ranks[i];
    if (diff[i] > 0) w_plus += ranks[i];
  }
  const std::size_t n = diff.size();

  if (n <= 25) {
    // Null distribution of the doubled positive-rank sum by subset-sum DP.
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (const auto r : ranks) {
      for (std::int64_t s = total; s >= r; --s) {
        ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - r)];
      }
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (std::int64_t s = 0; s <= total; ++s) {
      if (s <= w_plus) lower += ways[static_cast<std::size_t>(s)];
      if (s >= w_plus) upper += ways[static_cast<std::size_t>(s)];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
  }

  const double w = static_cast<double>(w_plus) / 2.0;
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<std::int64_t> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = (std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, 2.0 * normal_sf(std::max(z, 0.0)));
}

}  // namespace multiscore
