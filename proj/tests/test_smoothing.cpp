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
#include "multiscore/rng.hpp"
#include "multiscore/smoothing.hpp"

using namespace multiscore;

namespace {

StageDistribution random_simplex(Rng& rng, bool sparse = false) {
  StageDistribution p{};
  double s = 0;
  for (auto& v : p) {
    v = (sparse && rng.uniform() < 0.4) ? 0.0 : -std::log(1.0 - rng.uniform());
    s += v;
  }
  if (s == 0) {
    p[rng.below(5)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= s;
  return p;
}

double sum(const StageDistribution& p) {
  double s = 0;
  for (double v : p) s += v;
  return s;
}

double max_diff(const StageDistribution& a, const StageDistribution& b) {
  double m = 0;
  for (std::size_t k = 0; k < 5; ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST_CASE("worked example smoothing") {
  const StageDistribution sc{0.6, 0.2, 0.2, 0.0, 0.0};
  const auto t = sc_smooth(one_hot(0), 0.5, sc);
  CHECK(max_diff(t.values, {0.8, 0.1, 0.1, 0.0, 0.0}) <= 1e-12);
  CHECK(t.mode == SmoothingMode::soft_consensus);
  CHECK(t.alpha == 0.5);

  const auto u = uniform_smooth(one_hot(1), 0.5);
  CHECK(max_diff(u.values, {0.1, 0.6, 0.1, 0.1, 0.1}) <= 1e-12);
  CHECK(u.mode == SmoothingMode::uniform);
}

TEST_CASE("smoothing invariants over random rows") {
  Rng rng(41);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t k = rng.below(5);
    const auto y = one_hot(k);
    const double alpha = trial % 10 == 0 ? 1.0 : (trial % 10 == 1 ? 0.0 : rng.uniform());
    const auto sc = random_simplex(rng, trial % 2 == 0);

    const auto t = sc_smooth(y, alpha, sc);
    CHECK(std::abs(sum(t.values) - 1.0) <= 1e-12);
    for (std::size_t c = 0; c < 5; ++c) {
      CHECK(t.values[c] >= 0.0);
      CHECK(std::abs(t.values[c] - ((1 - alpha) * y[c] + alpha * sc[c])) <= 1e-15);
    }
    const auto u = uniform_smooth(y, alpha * 0.5);
    CHECK(std::abs(sum(u.values) - 1.0) <= 1e-12);
    CHECK(u.values[k] == doctest::Approx(1.0 - alpha * 0.5 + alpha * 0.1).epsilon(1e-12));

    CHECK(sc_smooth(y, 1.0, sc).values == sc);
    CHECK(sc_smooth(y, 0.0, sc).values == y);
    CHECK(sc_smooth(y, alpha, y).values == y);
  }
}

TEST_CASE("smoothing rejects bad input") {
  const StageDistribution sc{0.6, 0.2, 0.2, 0.0, 0.0};
  CHECK_THROWS_AS(sc_smooth({0.5, 0.5, 0, 0, 0}, 0.5, sc), ValidationError);
  CHECK_THROWS_AS(sc_smooth(one_hot(0), 1.5, sc), ValidationError);
  CHECK_THROWS_AS(sc_smooth(one_hot(0), -0.1, sc), ValidationError);
  CHECK_THROWS_AS(sc_smooth(one_hot(0), 0.5, {0.6, 0.2, 0.2, 0.1, 0.0}), ValidationError);
  CHECK_THROWS_AS(uniform_smooth({0, 0, 0, 0, 0}, 0.1), ValidationError);
}

TEST_CASE("cross-entropy obeys Gibbs' inequality and clamps zeros") {
  Rng rng(43);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto t = random_simplex(rng, trial % 3 == 0);
    const auto p = random_simplex(rng);
    CHECK(cross_entropy(t, p) >= cross_entropy(t, t) - 1e-12);
  }
  const double ce = cross_entropy(one_hot(0), {0.0, 1.0, 0.0, 0.0, 0.0});
  CHECK(std::isfinite(ce));
  CHECK(ce == doctest::Approx(-std::log(1e-12)));
  CHECK(cross_entropy(one_hot(2), one_hot(2)) == 0.0);
}

TEST_CASE("cross-entropy gradient matches finite differences on logits") {
  Rng rng(47);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = random_simplex(rng, trial % 2 == 0);
    StageDistribution z{};
    for (auto& v : z) v = 3.0 * rng.normal();
    const auto g = cross_entropy_grad(t, z);
    const double h = 1e-5;
    for (std::size_t k = 0; k < 5; ++k) {
      auto zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (cross_entropy(t, softmax(zp)) - cross_entropy(t, softmax(zm))) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
    }
    CHECK(std::abs(sum(g)) <= 1e-12);
  }
}

TEST_CASE("softmax is stable for large logits") {
  const auto p = softmax({1000.0, 999.0, -1000.0, 0.0, 0.0});
  CHECK(std::abs(sum(p) - 1.0) <= 1e-12);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(is_probability_vector(p));
  CHECK_FALSE(is_probability_vector({0.5, 0.6, 0, 0, 0}));
  CHECK_FALSE(is_probability_vector({1.1, -0.1, 0, 0, 0}));
}
