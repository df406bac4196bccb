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

#include "multiscore/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "multiscore/consensus.hpp"
#include "multiscore/errors.hpp"
#include "multiscore/rng.hpp"

namespace multiscore {

namespace {

// Stream tags for derive_seed; one random stream per (subject, purpose).
constexpr std::uint64_t kLatentStream = 1;
constexpr std::uint64_t kLabelStream = 2;
constexpr std::uint64_t kFeatureStream = 3;
constexpr std::uint64_t kPilotStream = 4;

bool row_stochastic(const StochasticMatrix& m) {
  for (const auto& row : m) {
    double sum = 0.0;
    for (const double x : row) {
      if (!(x >= 0.0)) return false;
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) return false;
  }
  return true;
}

std::size_t latent_class(SleepStage s) {
  const auto k = class_index(s);
  if (!k) throw ValidationError("latent hypnogram contains NC");
  return *k;
}

}  // namespace

StochasticMatrix symmetric_confusion(double diag) {
  StochasticMatrix m{};
  const double off = (1.0 - diag) / static_cast<double>(kNumClasses - 1);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = 0; j < kNumClasses; ++j) m[i][j] = i == j ? diag : off;
  }
  return m;
}

Eigen::MatrixXd axis_class_means(std::size_t feature_dim, double separation) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(kNumClasses, static_cast<Eigen::Index>(feature_dim));
  for (std::size_t k = 0; k < kNumClasses && feature_dim > 0; ++k) {
    means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k % feature_dim)) += separation;
  }
  return means;
}

GeneratorSpec default_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.seed = seed;
  // Sticky stage dynamics: long N2/N3/R runs, short N1 bouts.
  spec.transition = {{{0.90, 0.06, 0.02, 0.00, 0.02},
                      {0.05, 0.75, 0.17, 0.00, 0.03},
                      {0.02, 0.03, 0.88, 0.05, 0.02},
                      {0.01, 0.00, 0.08, 0.91, 0.00},
                      {0.03, 0.03, 0.03, 0.00, 0.91}}};
  spec.confusions.assign(spec.scorers, symmetric_confusion(0.8));
  spec.class_means = axis_class_means(spec.feature_dim, 1.0);
  spec.noise_scale = 0.5;
  return spec;
}

void validate(const GeneratorSpec& spec) {
  if (spec.subjects < 1 || spec.epochs < 1) throw ValidationError("spec needs subjects and epochs");
  if (spec.scorers < 1) throw ValidationError("spec needs at least one scorer");
  if (spec.confusions.size() != spec.scorers) {
    throw ValidationError("spec needs one confusion matrix per scorer");
  }
  if (!row_stochastic(spec.transition)) throw ValidationError("transition matrix is not row-stochastic");
  for (const auto& c : spec.confusions) {
    if (!row_stochastic(c)) throw ValidationError("confusion matrix is not row-stochastic");
  }
  if (spec.feature_dim < 1) throw ValidationError("feature dimension must be positive");
  if (spec.class_means.rows() != static_cast<Eigen::Index>(kNumClasses) ||
      spec.class_means.cols() != static_cast<Eigen::Index>(spec.feature_dim)) {
    throw ValidationError("class means must be 5 x feature_dim");
  }
  if (!(spec.noise_scale > 0.0)) throw ValidationError("noise scale must be positive");
}

std::string subject_name(std::size_t subject_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%03zu", subject_index + 1);
  return buf;
}

Hypnogram gen_latent_hypnogram(const GeneratorSpec& spec, std::size_t subject_index) {
  Rng rng(derive_seed(spec.seed, {subject_index, kLatentStream}));
  Hypnogram h{subject_name(subject_index), "latent", {}};
  h.stages.reserve(spec.epochs);
  std::size_t state = 0;
  for (std::size_t t = 0; t < spec.epochs; ++t) {
    if (t > 0) state = rng.categorical(spec.transition[state]);
    h.stages.push_back(kClassStages[state]);
  }
  return h;
}

MultiScoredRecord gen_scorer_labels(const Hypnogram& latent, const GeneratorSpec& spec,
                                    std::size_t subject_index) {
  Rng rng(derive_seed(spec.seed, {subject_index, kLabelStream}));
  std::vector<Hypnogram> scorers;
  for (std::size_t j = 0; j < spec.scorers; ++j) {
    scorers.push_back({latent.subject_id, "scorer_" + std::to_string(j + 1), {}});
    scorers.back().stages.reserve(latent.stages.size());
  }
  for (const SleepStage s : latent.stages) {
    const std::size_t k = latent_class(s);
    for (std::size_t j = 0; j < spec.scorers; ++j) {
      scorers[j].stages.push_back(kClassStages[rng.categorical(spec.confusions[j][k])]);
    }
  }
  return make_record(scorers);
}

FeatureMatrix gen_features(const Hypnogram& latent, const GeneratorSpec& spec,
                           std::size_t subject_index) {
  Rng rng(derive_seed(spec.seed, {subject_index, kFeatureStream}));
  FeatureMatrix fm;
  fm.subject_id = latent.subject_id;
  const auto T = static_cast<Eigen::Index>(latent.stages.size());
  const auto D = static_cast<Eigen::Index>(spec.feature_dim);
  fm.values.resize(T, D);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto k = static_cast<Eigen::Index>(latent_class(latent.stages[static_cast<std::size_t>(t)]));
    for (Eigen::Index d = 0; d < D; ++d) {
      fm.values(t, d) = spec.class_means(k, d) + spec.noise_scale * rng.normal();
    }
  }
  return fm;
}

SyntheticSubject generate_subject(const GeneratorSpec& spec, std::size_t subject_index) {
  SyntheticSubject s;
  s.latent = gen_latent_hypnogram(spec, subject_index);
  s.record = gen_scorer_labels(s.latent, spec, subject_index);
  s.features = gen_features(s.latent, spec, subject_index);
  return s;
}

std::vector<SyntheticSubject> generate_cohort(const GeneratorSpec& spec) {
  validate(spec);
  std::vector<SyntheticSubject> out;
  out.reserve(spec.subjects);
  for (std::size_t i = 0; i < spec.subjects; ++i) out.push_back(generate_subject(spec, i));
  return out;
}

double mean_soft_agreement(const std::vector<MultiScoredRecord>& records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& rec : records) {
    for (std::size_t j = 0; j < rec.num_scorers(); ++j) {
      sum += soft_agreement(rec, j);
      ++n;
    }
  }
  if (n == 0) throw ValidationError("mean_soft_agreement: no scorers");
  return sum / static_cast<double>(n);
}

namespace {

double pilot_agreement(const GeneratorSpec& templ, std::size_t pilot_subjects, double diag) {
  GeneratorSpec pilot = templ;
  pilot.subjects = pilot_subjects;
  pilot.seed = derive_seed(templ.seed, {kPilotStream});
  pilot.confusions.assign(pilot.scorers, symmetric_confusion(diag));
  std::vector<MultiScoredRecord> records;
  for (std::size_t i = 0; i < pilot.subjects; ++i) {
    const Hypnogram latent = gen_latent_hypnogram(pilot, i);
    records.push_back(gen_scorer_labels(latent, pilot, i));
  }
  return mean_soft_agreement(records);
}

}  // namespace

CalibrationOutcome calibrate_agreement(double target, const GeneratorSpec& templ,
                                       std::size_t pilot_subjects, double tolerance) {
  if (!(target > 0.3 && target <= 1.0)) {
    throw ValidationError("target Soft-Agreement must lie in (0.3, 1]");
  }
  if (templ.scorers < 2) throw ValidationError("calibration needs at least two scorers");
  if (pilot_subjects < 1) throw ValidationError("calibration needs a pilot cohort");

  CalibrationOutcome out;
  out.spec = templ;
  auto finish = [&](double diag, double achieved) {
    out.diagonal = diag;
    out.achieved = achieved;
    out.spec.confusions.assign(templ.scorers, symmetric_confusion(diag));
    return out;
  };
  if (target >= 1.0) return finish(1.0, 1.0);

  // Below 1/K the scorers become anti-correlated with the latent stage.
  double lo = 1.0 / static_cast<double>(kNumClasses);
  double hi = 1.0;
  const double f_lo = pilot_agreement(templ, pilot_subjects, lo);
  if (f_lo > target + tolerance) {
    throw CalibrationError("target Soft-Agreement " + std::to_string(target) +
                               " is below the reachable range [" + std::to_string(f_lo) + ", 1]",
                           f_lo, 1.0);
  }
  double best_diag = lo;
  double best_value = f_lo;
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = pilot_agreement(templ, pilot_subjects, mid);
    if (std::abs(f - target) < std::abs(best_value - target)) {
      best_diag = mid;
      best_value = f;
    }
    if (std::abs(f - target) <= tolerance / 10.0) break;
    (f < target ? lo : hi) = mid;
  }
  if (std::abs(best_value - target) > tolerance) {
    throw CalibrationError("could not reach target Soft-Agreement " + std::to_string(target) +
                               "; closest " + std::to_string(best_value),
                           std::min(best_value, target), std::max(best_value, target));
  }
  return finish(best_diag, best_value);
}

}  // namespace multiscore
