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

#include <cmath>

#include "multiscore/errors.hpp"
#include "multiscore/metrics.hpp"
#include "multiscore/rng.hpp"
#include "oracles.hpp"

using namespace multiscore;
using S = SleepStage;

namespace {

Eigen::MatrixXd rows_with_confidence(const std::vector<double>& conf,
                                     const std::vector<int>& arg) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(conf.size()), 5);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    p.row(r).setConstant((1.0 - conf[i]) / 4.0);
    p(r, arg[i]) = conf[i];
  }
  return p;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<S> t{S::W, S::W}, p{S::N1, S::N1};
  const auto cm = confusion(t, p);
  CHECK(cm.counts[0][1] == 2);
  CHECK(cm.total() == 2);
  const std::vector<S> withnc{S::W, S::NC};
  CHECK_THROWS_AS(confusion(withnc, p), ValidationError);
  const std::vector<S> shorter{S::W};
  CHECK_THROWS_AS(confusion(shorter, p), ValidationError);
  CHECK_THROWS_AS(classification_scores(ConfusionMatrix{}), ValidationError);
}

TEST_CASE("hand-computed scores") {
  const std::vector<S> t{S::W, S::W, S::N1, S::N1}, p{S::W, S::N1, S::N1, S::N1};
  const auto s = classification_scores(confusion(t, p));
  CHECK(s.accuracy == doctest::Approx(0.75));
  CHECK(s.kappa == doctest::Approx(0.5));

  const auto perfect = classification_scores(confusion(t, t));
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.kappa == 1.0);
  CHECK(perfect.per_class_f1[0] == 1.0);
  CHECK(perfect.per_class_f1[1] == 1.0);
  // Absent classes count as zero in the macro mean.
  CHECK(perfect.macro_f1 == doctest::Approx(0.4));
  CHECK(perfect.weighted_f1 == 1.0);
}

TEST_CASE("scores agree with the brute-force oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    const int classes = 1 + static_cast<int>(rng.below(5));
    const auto t = oracle::random_labels(rng, n, classes);
    auto p = oracle::random_labels(rng, n, classes);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.5) p[i] = t[i];
    }
    const auto cm = confusion(t, p);
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        std::int64_t c = 0;
        for (std::size_t i = 0; i < n; ++i) c += oracle::idx(t[i]) == a && oracle::idx(p[i]) == b;
        CHECK(cm.counts[a][b] == c);
      }
    }
    const auto got = classification_scores(cm);
    const auto want = oracle::scores(t, p);
    CHECK(std::abs(got.accuracy - want.accuracy) <= 1e-12);
    CHECK(std::abs(got.macro_f1 - want.macro_f1) <= 1e-12);
    CHECK(std::abs(got.weighted_f1 - want.weighted_f1) <= 1e-12);
    CHECK(std::abs(got.kappa - want.kappa) <= 1e-12);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(got.per_class_f1[k] - want.f1[k]) <= 1e-12);
    CHECK(got.kappa >= -1.0);
    CHECK(got.kappa <= 1.0);
  }
}

TEST_CASE("kappa properties") {
  Rng rng(103);
  SUBCASE("uniform random predictions give kappa near 0") {
    std::vector<S> t(10000), p(10000);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<S>(i % 5);
      p[i] = static_cast<S>(rng.below(5));
    }
    CHECK(std::abs(classification_scores(confusion(t, p)).kappa) < 0.05);
  }
  SUBCASE("scaling counts leaves kappa unchanged") {
    const auto t = oracle::random_labels(rng, 97), p = oracle::random_labels(rng, 97);
    auto cm = confusion(t, p);
    const double k1 = classification_scores(cm).kappa;
    for (auto& row : cm.counts) {
      for (auto& c : row) c *= 7;
    }
    CHECK(classification_scores(cm).kappa == doctest::Approx(k1).epsilon(1e-12));
  }
  SUBCASE("balanced truth: weighted F1 equals macro F1") {
    std::vector<S> t(500);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(i % 5);
    const auto p = oracle::random_labels(rng, 500);
    const auto s = classification_scores(confusion(t, p));
    CHECK(s.weighted_f1 == doctest::Approx(s.macro_f1).epsilon(1e-12));
  }
}

TEST_CASE("ECE fixtures") {
  const auto p = rows_with_confidence({0.9, 0.8, 0.6, 0.55}, {0, 0, 0, 1});
  const std::vector<S> truth{S::W, S::W, S::W, S::W};
  CHECK(ece(p, truth, 2).ece == doctest::Approx(0.0375).epsilon(1e-12));
  CHECK(ece(p, truth, 4).ece == doctest::Approx(0.1125).epsilon(1e-12));
  CHECK(ece(p, truth, 2).ece == doctest::Approx(oracle::ece(p, truth, 2)).epsilon(1e-12));

  const auto bins = ece(p, truth, 4).bins;
  std::size_t total = 0;
  for (const auto& b : bins.bins) total += b.count;
  CHECK(total == 4);
  CHECK(bins.total == 4);
  CHECK(bins.bins[0].count == 0);

  const auto sure = rows_with_confidence({1.0, 1.0}, {2, 3});
  const std::vector<S> right{S::N2, S::N3};
  CHECK(ece(sure, right).ece == 0.0);
  CHECK_THROWS_AS(ece(sure, right, 0), ValidationError);

  // Per-bin accuracy equal to per-bin confidence: half right at 0.5.
  const auto half = rows_with_confidence({0.5, 0.5}, {0, 0});
  const std::vector<S> mixed{S::W, S::N1};
  CHECK(ece(half, mixed).ece == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("calibration bins use right-closed intervals") {
  CHECK(calibration_bin(1.0, 10) == 9);
  CHECK(calibration_bin(0.5, 2) == 0);
  CHECK(calibration_bin(0.500001, 2) == 1);
  CHECK(calibration_bin(0.2, 5) == 0);
  CHECK(calibration_bin(0.3, 10) == 2);
  CHECK(calibration_bin(0.7, 10) == 6);
  CHECK(calibration_bin(0.0, 10) == 0);
  for (int m = 1; m <= 20; ++m) {
    for (int b = 1; b <= m; ++b) {
      CHECK(calibration_bin(static_cast<double>(b) / m, static_cast<std::size_t>(m)) ==
            static_cast<std::size_t>(b - 1));
    }
  }
}

TEST_CASE("ECE agrees with the brute-force binning oracle") {
  Rng rng(107);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(400));
    const auto p = oracle::random_probs(rng, n);
    const auto truth = oracle::random_labels(rng, static_cast<std::size_t>(n));
    const int bins = 1 + static_cast<int>(rng.below(20));
    const auto r = ece(p, truth, static_cast<std::size_t>(bins));
    CHECK(std::abs(r.ece - oracle::ece(p, truth, bins)) <= 1e-12);
    CHECK(r.ece >= 0.0);
    CHECK(r.ece <= 1.0);
  }
}

TEST_CASE("mean confidence") {
  Eigen::MatrixXd p(3, 5);
  p << 1, 0, 0, 0, 0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1, 0.5, 0.2, 0.1, 0.1;
  CHECK(mean_confidence(p) == doctest::Approx((1.0 + 0.2 + 0.5) / 3.0));
  CHECK(mean_confidence(Eigen::MatrixXd::Constant(4, 5, 0.2)) == doctest::Approx(0.2));
}

TEST_CASE("ACS fixtures and properties") {
  Eigen::MatrixXd sc(1, 5), p(1, 5);
  sc << 0.6, 0.2, 0.2, 0, 0;
  p << 1, 0, 0, 0, 0;
  CHECK(std::abs(acs(sc, p) - 0.6 / std::sqrt(0.44)) <= 1e-9);
  CHECK(std::abs(acs(sc, p) - 0.904534) <= 1e-6);
  Eigen::MatrixXd q(1, 5);
  q << 0, 1, 0, 0, 0;
  CHECK(acs(p, q) == 0.0);

  Rng rng(109);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(100));
    const auto a = oracle::random_probs(rng, n), b = oracle::random_probs(rng, n);
    CHECK(std::abs(acs(a, a) - 1.0) <= 1e-12);
    CHECK(std::abs(acs(a, b) - acs(b, a)) <= 1e-15);
    CHECK(acs(a, b) >= 0.0);
    CHECK(acs(a, b) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(acs(Eigen::MatrixXd::Zero(1, 5), p), InternalError);
  CHECK_THROWS_AS(acs(Eigen::MatrixXd::Constant(2, 5, 0.2), p), ValidationError);
}

TEST_CASE("aggregate uses mean and population std") {
  SubjectMetrics a, b;
  a.subject_id = "A";
  a.acs = 0.8;
  b.subject_id = "B";
  b.acs = 0.9;
  const auto r = aggregate({a, b});
  CHECK(r["acs"].mean == doctest::Approx(0.85));
  CHECK(r["acs"].std == doctest::Approx(0.05));
  const auto single = aggregate({a});
  CHECK(single["acs"].mean == 0.8);
  CHECK(single["acs"].std == 0.0);
  CHECK_THROWS_AS(aggregate({}), ValidationError);

  Rng rng(113);
  std::vector<SubjectMetrics> many(17);
  for (auto& m : many) {
    m.ece = rng.uniform();
    m.scores.accuracy = rng.uniform();
  }
  const auto agg = aggregate(many);
  double mean = 0, var = 0;
  for (const auto& m : many) mean += m.ece / 17.0;
  for (const auto& m : many) var += (m.ece - mean) * (m.ece - mean) / 17.0;
  CHECK(agg["ece"].mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(agg["ece"].std == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
}

TEST_CASE("Wilcoxon signed-rank test") {
  std::vector<double> a(10), b(10);
  for (int i = 0; i < 10; ++i) {
    a[i] = 1.0 + i;
    b[i] = 0.5;
  }
  CHECK(paired_test(a, b) == doctest::Approx(2.0 / 1024.0).epsilon(1e-12));
  CHECK(paired_test(b, a) == doctest::Approx(2.0 / 1024.0).epsilon(1e-12));
  CHECK(paired_test(a, a) == 1.0);
  const std::vector<double> four{1, 2, 3, 4};
  CHECK_THROWS_AS(paired_test(four, four), ValidationError);

  Rng rng(127);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(12);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values so ties and zero differences occur.
      x[i] = std::round(rng.normal() * 3.0) / 2.0;
      y[i] = std::round((rng.normal() + 0.3) * 3.0) / 2.0;
    }
    CHECK(paired_test(x, y) == doctest::Approx(oracle::wilcoxon_exhaustive(x, y)).epsilon(1e-12));
    CHECK(paired_test(x, y) == doctest::Approx(paired_test(y, x)).epsilon(1e-12));
  }

  // Normal approximation: a clear shift is significant, noise is not.
  std::vector<double> x(60), y(60), z(60);
  for (std::size_t i = 0; i < 60; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + 0.5 + 0.2 * rng.normal();
    z[i] = x[i] + 0.2 * rng.normal();
  }
  CHECK(paired_test(x, y) < 1e-6);
  CHECK(paired_test(x, z) > 0.001);
}
