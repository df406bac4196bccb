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
#include <vector>

#include "multiscore/errors.hpp"
#include "multiscore/model.hpp"
#include "multiscore/rng.hpp"
#include "multiscore/smoothing.hpp"

using namespace multiscore;

namespace {

ReferenceModel make(std::size_t d, std::size_t h, double dropout, std::uint64_t seed) {
  ModelConfig c;
  c.input_dim = d;
  c.hidden_width = h;
  c.dropout_rate = dropout;
  c.seed = seed;
  auto m = init_model(c);
  m.input_shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
  return m;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

Eigen::MatrixXd random_targets(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd t(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (int k = 0; k < 5; ++k) s += t(i, k) = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    if (s == 0) {
      t(i, 0) = 1;
      s = 1;
    }
    t.row(i) /= s;
  }
  return t;
}

double max_relative_gradient_error(ReferenceModel m, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& t, const Eigen::MatrixXd* mask) {
  const auto g = loss_and_gradient(m, x, t, mask).gradient;
  double worst = 0;
  for (Eigen::Index i = 0; i < m.params.size(); ++i) {
    const double keep = m.params[i];
    const double h = 1e-6;
    m.params[i] = keep + h;
    const double up = loss_and_gradient(m, x, t, mask).loss;
    m.params[i] = keep - h;
    const double down = loss_and_gradient(m, x, t, mask).loss;
    m.params[i] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1e-3, std::abs(fd) + std::abs(g[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("init_model shapes and determinism") {
  const auto a = make(6, 4, 0.3, 9), b = make(6, 4, 0.3, 9), c = make(6, 4, 0.3, 10);
  CHECK(a.params.size() == 6 * 4 + 4 + 4 * 5 + 5);
  CHECK(static_cast<std::size_t>(a.params.size()) == parameter_count(a.config));
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);
  CHECK(a.b1().isZero());
  CHECK(a.b2().isZero());
  CHECK(a.w1().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
  CHECK(a.w2().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));

  const auto lin = make(6, 0, 0.0, 1);
  CHECK(lin.params.size() == 6 * 5 + 5);
  CHECK(lin.w2().rows() == 5);
  CHECK(lin.w2().cols() == 6);

  ModelConfig bad;
  bad.input_dim = 3;
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(init_model(bad), ValidationError);
  bad.dropout_rate = 0.1;
  bad.input_dim = 0;
  CHECK_THROWS_AS(init_model(bad), ValidationError);
}

TEST_CASE("forward pass") {
  auto zero = make(3, 4, 0.3, 1);
  zero.params.setZero();
  const std::vector<double> x{1.0, -2.0, 0.5};
  const auto r = forward(zero, x, false);
  for (double p : r.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(predict_proba(zero, Eigen::MatrixXd::Ones(3, 3)).isApproxToConstant(0.2));

  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = make(3, trial % 3 == 0 ? 0 : 1 + rng.below(8), 0.3, rng.next_u64());
    std::vector<double> in{3 * rng.normal(), 3 * rng.normal(), 3 * rng.normal()};
    const auto a = forward(m, in, false);
    const auto b = forward(m, in, false);
    CHECK(a.probs == b.probs);
    double s = 0;
    for (double p : a.probs) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
    const auto batch = predict_proba(m, Eigen::Map<const Eigen::RowVectorXd>(in.data(), 3));
    for (int k = 0; k < 5; ++k) CHECK(batch(0, k) == a.probs[k]);
    Rng drop(7);
    const auto stochastic = forward(m, in, true, &drop);
    s = 0;
    for (double p : stochastic.probs) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(forward(zero, wrong, false), ValidationError);
  CHECK_THROWS_AS(forward(zero, x, true), ValidationError);
}

TEST_CASE("dropout mask uses inverted scaling") {
  Rng rng(3);
  const auto mask = sample_dropout_mask(400, 50, 0.3, rng);
  int dropped = 0;
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double v = mask.data()[i];
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.7) <= 1e-15));
    dropped += v == 0.0;
  }
  CHECK(std::abs(dropped / 20000.0 - 0.3) < 0.02);
  CHECK(std::abs(mask.mean() - 1.0) < 0.03);
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(19);
  for (const std::size_t hidden : {0, 3, 16}) {
    auto m = make(7, hidden, 0.3, 23 + hidden);
    m.params = random_matrix(rng, m.params.size(), 1, 0.7);
    m.input_shift = random_matrix(rng, 7, 1, 0.1);
    m.input_scale = (random_matrix(rng, 7, 1, 0.2).array() + 1.0).matrix();
    const auto x = random_matrix(rng, 32, 7);
    const auto t = random_targets(rng, 32);
    CHECK(max_relative_gradient_error(m, x, t, nullptr) <= 1e-5);
    if (hidden > 0) {
      const auto mask = sample_dropout_mask(32, static_cast<Eigen::Index>(hidden), 0.3, rng);
      CHECK(max_relative_gradient_error(m, x, t, &mask) <= 1e-5);
    }
  }
}

TEST_CASE("loss equals mean per-row cross-entropy") {
  Rng rng(29);
  const auto m = make(4, 5, 0.0, 2);
  const auto x = random_matrix(rng, 10, 4);
  const auto t = random_targets(rng, 10);
  const auto p = predict_proba(m, x);
  double want = 0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    StageDistribution ti{}, pi{};
    for (int k = 0; k < 5; ++k) {
      ti[k] = t(i, k);
      pi[k] = p(i, k);
    }
    want += cross_entropy(ti, pi) / 10.0;
  }
  CHECK(loss_and_gradient(m, x, t).loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("Adam updates") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Eigen::VectorXd p(3);
    p << 1, 2, 3;
    auto s = make_adam_state(3);
    s.m.setConstant(1.0);
    const Eigen::VectorXd before = p;
    adam_step(p, Eigen::VectorXd::Zero(3), s);
    CHECK(s.step == 1);
    CHECK(s.m.isApproxToConstant(0.9));
    // The decayed first moment still moves parameters; from a fresh state it does not.
    auto fresh = make_adam_state(3);
    Eigen::VectorXd q = before;
    adam_step(q, Eigen::VectorXd::Zero(3), fresh);
    CHECK(q == before);
  }
  SUBCASE("first step has magnitude lr") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd g(4);
    g << 0.5, -3.0, 1e-3, 200.0;
    auto s = make_adam_state(4, 1e-3);
    adam_step(p, g, s);
    for (Eigen::Index i = 0; i < 4; ++i) {
      CHECK(std::abs(std::abs(p[i]) - 1e-3) <= 1e-3 * 1e-4);
      CHECK(p[i] * g[i] < 0);
    }
  }
  SUBCASE("quadratic converges") {
    Eigen::VectorXd p(1);
    p << 5.0;
    auto s = make_adam_state(1, 1e-2);
    int steps = 0;
    for (; steps < 2000 && std::abs(p[0] - 1.5) > 1e-4; ++steps) {
      Eigen::VectorXd g(1);
      g << 2.0 * (p[0] - 1.5);
      adam_step(p, g, s);
    }
    // Keep iterating to make sure it stays there.
    for (int i = steps; i < 2000; ++i) {
      Eigen::VectorXd g(1);
      g << 2.0 * (p[0] - 1.5);
      adam_step(p, g, s);
    }
    CHECK(std::abs(p[0] - 1.5) <= 1e-4);
  }
  SUBCASE("non-finite gradient aborts without touching state") {
    Eigen::VectorXd p = Eigen::VectorXd::Ones(2);
    Eigen::VectorXd g(2);
    g << 1.0, std::nan("");
    auto s = make_adam_state(2);
    CHECK_THROWS_AS(adam_step(p, g, s), NumericError);
    CHECK(s.step == 0);
    CHECK(p == Eigen::VectorXd::Ones(2));
  }
}

TEST_CASE("training on a separable toy problem") {
  Rng rng(31);
  const Eigen::Index n = 400;
  Eigen::MatrixXd x(n, 2), t = Eigen::MatrixXd::Zero(n, 5);
  std::vector<SleepStage> labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool cls = i % 2 == 0;
    x(i, 0) = (cls ? 2.0 : -2.0) + 0.5 * rng.normal();
    x(i, 1) = rng.normal();
    t(i, cls ? 0 : 2) = 1.0;
    labels[static_cast<std::size_t>(i)] = cls ? SleepStage::W : SleepStage::N2;
  }
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.batch_size = 32;
  tc.max_iterations = 30;
  tc.seed = 4;
  const auto r = train(make(2, 8, 0.1, 3), x, t, x, labels, tc);
  const auto p = predict_proba(r.model, x);
  int correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg;
    p.row(i).maxCoeff(&arg);
    correct += static_cast<SleepStage>(arg) == labels[static_cast<std::size_t>(i)];
  }
  CHECK(correct / static_cast<double>(n) >= 0.99);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(p.row(i).sum() - 1.0) <= 1e-12);

  // Best snapshot sits at the maximum recorded validation score.
  const auto& h = r.history;
  REQUIRE_FALSE(h.val_macro_f1.empty());
  CHECK(h.val_macro_f1[h.best_check] ==
        *std::max_element(h.val_macro_f1.begin(), h.val_macro_f1.end()));
  CHECK(h.train_loss.size() == h.val_macro_f1.size());

  // Same config, same seed, same result.
  const auto again = train(make(2, 8, 0.1, 3), x, t, x, labels, tc);
  CHECK(again.model.params == r.model.params);
  CHECK(again.history.train_loss == h.train_loss);
}

TEST_CASE("soft targets on a constant input converge to the target") {
  const Eigen::Index n = 3000;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(n, 3, 0.7);
  Eigen::MatrixXd t(n, 5);
  t.rowwise() = (Eigen::RowVectorXd(5) << 0.6, 0.2, 0.2, 0.0, 0.0).finished();
  const std::vector<SleepStage> val{SleepStage::W};
  TrainConfig tc;
  tc.lr = 1e-2;
  tc.batch_size = 1;
  tc.max_iterations = 1;
  const auto r = train(make(3, 0, 0.0, 8), x, t, x.topRows(1), val, tc);
  const auto p = predict_proba(r.model, x.topRows(1));
  const double want[5] = {0.6, 0.2, 0.2, 0.0, 0.0};
  for (int k = 0; k < 5; ++k) CHECK(std::abs(p(0, k) - want[k]) <= 0.02);
}

TEST_CASE("early stopping") {
  Rng rng(37);
  const auto x = random_matrix(rng, 50, 3);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(50, 5);
  t.col(1).setOnes();
  std::vector<SleepStage> val(50, SleepStage::N1);
  TrainConfig tc;
  tc.lr = 0.0;
  tc.patience = 1;
  tc.max_iterations = 20;
  const auto r = train(make(3, 4, 0.0, 1), x, t, x, val, tc);
  CHECK(r.history.stop_reason == StopReason::early_stop);
  CHECK(r.history.best_check == 0);
  CHECK(r.history.val_macro_f1.size() == 2);

  tc.patience = 100;
  tc.max_iterations = 3;
  const auto capped = train(make(3, 4, 0.0, 1), x, t, x, val, tc);
  CHECK(capped.history.stop_reason == StopReason::max_iterations);
  CHECK(capped.history.val_macro_f1.size() == 3);

  CHECK_THROWS_AS(train(make(3, 4, 0.0, 1), Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 5), x, val, tc),
                  ValidationError);
  CHECK_THROWS_AS(train(make(3, 4, 0.0, 1), x, t, Eigen::MatrixXd(0, 3), {}, tc), ValidationError);
}

TEST_CASE("MC dropout") {
  Rng rng(41);
  auto m = make(4, 16, 0.5, 6);
  m.params = random_matrix(rng, m.params.size(), 1, 1.0);
  const auto x = random_matrix(rng, 5, 4);

  const auto one = mc_dropout_predict(m, x, 1, 99);
  Rng same(99);
  const auto mask = sample_dropout_mask(5, 16, 0.5, same);
  CHECK(one == softmax_rows(batch_logits(m, x, &mask)));

  auto spread = [&](std::size_t passes) {
    // Std across repeats, averaged over every entry.
    const int repeats = 100;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(5, 5), sq = Eigen::MatrixXd::Zero(5, 5);
    for (int r = 0; r < repeats; ++r) {
      const auto p = mc_dropout_predict(m, x, passes, 1000 + static_cast<std::uint64_t>(r));
      sum += p;
      sq += p.cwiseProduct(p);
    }
    const Eigen::MatrixXd mean = sum / repeats;
    return ((sq / repeats - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt()).mean();
  };
  const double s2 = spread(2), s32 = spread(32);
  // Sixteen times the passes: about a quarter of the spread.
  CHECK(s2 / s32 > 3.2);
  CHECK(s2 / s32 < 4.8);

  const auto many = mc_dropout_predict(m, x, 200, 5);
  for (Eigen::Index i = 0; i < many.rows(); ++i) CHECK(std::abs(many.row(i).sum() - 1.0) <= 1e-12);

  CHECK_THROWS_AS(mc_dropout_predict(make(4, 16, 0.0, 1), x, 10, 1), ConfigError);
  CHECK_THROWS_AS(mc_dropout_predict(make(4, 0, 0.3, 1), x, 10, 1), ConfigError);
  CHECK_THROWS_AS(mc_dropout_predict(m, x, 0, 1), ConfigError);
}

TEST_CASE("model text round trip is exact") {
  Rng rng(43);
  auto m = make(5, 7, 0.25, 12);
  m.params = random_matrix(rng, m.params.size(), 1, 1.0);
  m.input_shift = random_matrix(rng, 5, 1);
  m.input_scale = random_matrix(rng, 5, 1).cwiseAbs();
  const auto back = parse_model(serialize_model(m));
  CHECK(back.params == m.params);
  CHECK(back.input_shift == m.input_shift);
  CHECK(back.input_scale == m.input_scale);
  CHECK(back.config.hidden_width == 7);
  CHECK(back.config.dropout_rate == 0.25);
  CHECK(serialize_model(back) == serialize_model(m));
  CHECK_THROWS_AS(parse_model("format=other\n"), ParseError);
}
