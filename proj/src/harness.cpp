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

#include "multiscore/harness.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "multiscore/errors.hpp"
#include "multiscore/io.hpp"
#include "multiscore/rng.hpp"
#include "multiscore/smoothing.hpp"

#ifndef MULTISCORE_GIT_COMMIT
#define MULTISCORE_GIT_COMMIT "unknown"
#endif
#ifndef MULTISCORE_VERSION
#define MULTISCORE_VERSION "0.0.0"
#endif

namespace multiscore {

std::string_view to_string(Arm arm) noexcept {
  switch (arm) {
    case Arm::base: return "base";
    case Arm::ls_u: return "base+LS_U";
    case Arm::ls_sc: return "base+LS_SC";
  }
  return "base";
}

Arm parse_arm(std::string_view name) {
  if (name == "base") return Arm::base;
  if (name == "ls_u" || name == "base+LS_U") return Arm::ls_u;
  if (name == "ls_sc" || name == "base+LS_SC") return Arm::ls_sc;
  throw ConfigError("unknown arm \"" + std::string(name) + "\" (expected base, ls_u or ls_sc)");
}

std::vector<double> alpha_grid(Arm arm) {
  std::vector<double> grid;
  const int steps = arm == Arm::ls_u ? 5 : arm == Arm::ls_sc ? 10 : 0;
  for (int i = 1; i <= steps; ++i) grid.push_back(static_cast<double>(i) / 10.0);
  return grid;
}

SubjectData prepare_subject(const MultiScoredRecord& record, const FeatureMatrix& features) {
  SubjectData s;
  s.record = drop_unclassified(record);
  validate(s.record);
  check_alignment(features, s.record);
  s.features = features;
  s.ranking = rank_scorers(s.record);
  s.consensus = majority_vote(s.record, s.ranking);
  s.soft = soft_consensus(s.record);
  return s;
}

std::vector<SubjectData> prepare_dataset(const std::vector<MultiScoredRecord>& records,
                                         const std::vector<FeatureMatrix>& features) {
  std::map<std::string, const FeatureMatrix*> by_id;
  for (const auto& f : features) by_id[f.subject_id] = &f;
  if (by_id.size() != records.size()) {
    throw AlignmentError("label and feature tables cover different subject sets (" +
                         std::to_string(records.size()) + " vs " +
                         std::to_string(by_id.size()) + ")");
  }
  std::vector<SubjectData> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const auto it = by_id.find(rec.subject_id);
    if (it == by_id.end()) throw AlignmentError("no features for subject " + rec.subject_id);
    out.push_back(prepare_subject(rec, *it->second));
  }
  return out;
}

Eigen::MatrixXd context_inputs(const Eigen::MatrixXd& features, std::size_t context) {
  const Eigen::Index T = features.rows();
  const Eigen::Index D = features.cols();
  const auto c = static_cast<Eigen::Index>(context);
  Eigen::MatrixXd out(T, D * (2 * c + 1));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index o = -c; o <= c; ++o) {
      const Eigen::Index src = std::clamp<Eigen::Index>(t + o, 0, T - 1);
      out.block(t, (o + c) * D, 1, D) = features.row(src);
    }
  }
  return out;
}

Eigen::MatrixXd build_targets(const SubjectData& subject, Arm arm, double alpha) {
  const std::size_t T = subject.consensus.stages.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(T), kNumClasses);
  for (std::size_t t = 0; t < T; ++t) {
    const StageDistribution hot = one_hot(*class_index(subject.consensus.stages[t]));
    SmoothedTarget target;
    switch (arm) {
      case Arm::base: target = {hot, 0.0, SmoothingMode::none}; break;
      case Arm::ls_u: target = uniform_smooth(hot, alpha); break;
      case Arm::ls_sc: target = sc_smooth(hot, alpha, subject.soft.row(t)); break;
    }
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = target.values[k];
    }
  }
  return out;
}

FoldPlan make_folds(std::vector<std::string> subject_ids, std::size_t k, std::size_t val_count,
                    std::size_t test_count, std::uint64_t seed) {
  const std::size_t n = subject_ids.size();
  if (k < 1) throw ConfigError("need at least one fold");
  if (test_count < 1) throw ConfigError("need at least one test subject per fold");
  if (k * test_count > n) {
    throw ConfigError(std::to_string(k) + " folds of " + std::to_string(test_count) +
                      " test subjects exceed the cohort of " + std::to_string(n));
  }
  if (k == 1 && val_count + test_count >= n) {
    throw ConfigError("validation and test subjects leave no training subject");
  }

  Rng rng(derive_seed(seed, {0x464F4C44ULL}));
  rng.shuffle(subject_ids);

  FoldPlan plan;
  plan.k = k;
  const std::size_t remainder = k == 1 ? 0 : n - k * test_count;
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = test_count + (f < remainder ? 1 : 0);
    Fold fold;
    fold.test.assign(subject_ids.begin() + static_cast<std::ptrdiff_t>(cursor),
                     subject_ids.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += size;
    if (val_count + fold.test.size() >= n) {
      throw ConfigError("fold " + std::to_string(f) + ": validation and test subjects leave no " +
                        "training subject");
    }
    const std::set<std::string> test(fold.test.begin(), fold.test.end());
    std::vector<std::string> rest;
    for (const auto& id : subject_ids) {
      if (!test.count(id)) rest.push_back(id);
    }
    Rng fold_rng(derive_seed(seed, {0x56414CULL, f}));
    fold_rng.shuffle(rest);
    fold.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_count));
    fold.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_count), rest.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.folds.push_back(std::move(fold));
  }
  check_fold_plan(plan, subject_ids);
  return plan;
}

void check_fold_plan(const FoldPlan& plan, const std::vector<std::string>& subject_ids) {
  const std::set<std::string> cohort(subject_ids.begin(), subject_ids.end());
  std::map<std::string, int> tested;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    std::set<std::string> used;
    for (const auto* role : {&fold.train, &fold.validation, &fold.test}) {
      for (const auto& id : *role) {
        if (!cohort.count(id)) throw InternalError("fold plan names unknown subject " + id);
        if (!used.insert(id).second) {
          throw InternalError("subject " + id + " has two roles in fold " + std::to_string(f));
        }
      }
    }
    for (const auto& id : fold.test) ++tested[id];
  }
  if (plan.k >= 2) {
    for (const auto& id : cohort) {
      if (tested[id] != 1) {
        throw InternalError("subject " + id + " is tested " + std::to_string(tested[id]) +
                            " times");
      }
    }
  }
}

void validate(const ExperimentConfig& config) {
  if (config.arm == Arm::ls_u && !(config.alpha > 0.0 && config.alpha <= 0.5)) {
    throw ConfigError("base+LS_U needs alpha in (0, 0.5]");
  }
  if (config.arm == Arm::ls_sc && !(config.alpha > 0.0 && config.alpha <= 1.0)) {
    throw ConfigError("base+LS_SC needs alpha in (0, 1]");
  }
  if (config.mc_passes > 0 && (config.hidden_width == 0 || config.dropout_rate <= 0.0)) {
    throw ConfigError("MC dropout needs a hidden layer with positive dropout");
  }
}

std::size_t ArmResult::failed_folds() const {
  return static_cast<std::size_t>(
      std::count_if(folds.begin(), folds.end(), [](const FoldOutcome& f) { return !f.error.empty(); }));
}

double ArmResult::mean_val_macro_f1() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : folds) {
    if (!f.error.empty()) continue;
    sum += f.best_val_macro_f1;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

namespace {

struct Stacked {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::vector<SleepStage> labels;
};

Stacked stack_subjects(const std::vector<const SubjectData*>& subjects, const ExperimentConfig& config,
                       bool with_targets) {
  Eigen::Index rows = 0;
  for (const auto* s : subjects) rows += s->features.values.rows();
  const Eigen::Index cols =
      subjects.empty() ? 0
                       : subjects.front()->features.values.cols() *
                             static_cast<Eigen::Index>(2 * config.context + 1);
  Stacked out;
  out.inputs.resize(rows, cols);
  if (with_targets) out.targets.resize(rows, kNumClasses);
  Eigen::Index at = 0;
  for (const auto* s : subjects) {
    const Eigen::Index n = s->features.values.rows();
    if (s->features.values.cols() * static_cast<Eigen::Index>(2 * config.context + 1) != cols) {
      throw ValidationError("subject " + s->record.subject_id + " has a different feature width");
    }
    out.inputs.middleRows(at, n) = context_inputs(s->features.values, config.context);
    if (with_targets) out.targets.middleRows(at, n) = build_targets(*s, config.arm, config.alpha);
    out.labels.insert(out.labels.end(), s->consensus.stages.begin(), s->consensus.stages.end());
    at += n;
  }
  return out;
}

}  // namespace

ArmResult run_arm(const std::vector<SubjectData>& dataset, const ExperimentConfig& config,
                  const FoldPlan& plan, const PredictionSink& sink) {
  validate(config);
  std::map<std::string, const SubjectData*> by_id;
  std::vector<std::string> ids;
  for (const auto& s : dataset) {
    by_id[s.record.subject_id] = &s;
    ids.push_back(s.record.subject_id);
  }
  check_fold_plan(plan, ids);
  auto lookup = [&](const std::vector<std::string>& names) {
    std::vector<const SubjectData*> out;
    for (const auto& n : names) out.push_back(by_id.at(n));
    return out;
  };

  ArmResult result;
  result.arm = config.arm;
  result.alpha = config.arm == Arm::base ? 0.0 : config.alpha;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    FoldOutcome outcome;
    outcome.index = f;
    try {
      const Stacked train_set = stack_subjects(lookup(fold.train), config, true);
      const Stacked val_set = stack_subjects(lookup(fold.validation), config, false);

      ModelConfig mc;
      mc.input_dim = static_cast<std::size_t>(train_set.inputs.cols());
      mc.hidden_width = config.hidden_width;
      mc.dropout_rate = config.dropout_rate;
      mc.seed = derive_seed(config.seed, {f, 11});
      TrainConfig tc = config.train;
      tc.seed = derive_seed(config.seed, {f, 12});

      TrainResult trained = train(init_model(mc), train_set.inputs, train_set.targets,
                                  val_set.inputs, val_set.labels, tc);
      outcome.best_val_macro_f1 = trained.history.val_macro_f1.at(trained.history.best_check);
      outcome.history = std::move(trained.history);

      for (const auto* s : lookup(fold.test)) {
        const Eigen::MatrixXd x = context_inputs(s->features.values, config.context);
        const Eigen::MatrixXd probs = predict_proba(trained.model, x);
        result.rows.push_back(evaluate_subject(s->record.subject_id, probs, s->consensus.stages,
                                               s->soft.values, config.ece_bins));
        if (sink) sink(*s, probs);
        if (config.mc_passes > 0) {
          const auto subject_index =
              static_cast<std::uint64_t>(std::find(ids.begin(), ids.end(), s->record.subject_id) -
                                         ids.begin());
          const Eigen::MatrixXd mc_probs = mc_dropout_predict(
              trained.model, x, config.mc_passes, derive_seed(config.seed, {f, 13, subject_index}));
          result.mc_rows.push_back(evaluate_subject(s->record.subject_id, mc_probs,
                                                    s->consensus.stages, s->soft.values,
                                                    config.ece_bins));
        }
      }
    } catch (const Error& e) {
      outcome.error = e.what();
    }
    result.folds.push_back(std::move(outcome));
  }
  auto by_subject = [](const SubjectMetrics& a, const SubjectMetrics& b) {
    return a.subject_id < b.subject_id;
  };
  std::sort(result.rows.begin(), result.rows.end(), by_subject);
  std::sort(result.mc_rows.begin(), result.mc_rows.end(), by_subject);
  return result;
}

GridSearchResult grid_search_alpha(const std::vector<SubjectData>& dataset,
                                   const ExperimentConfig& config, const FoldPlan& plan,
                                   std::vector<double> grid, const GridPredictionSink& sink) {
  if (config.arm == Arm::base) throw ConfigError("grid search needs a smoothing arm");
  if (grid.empty()) grid = alpha_grid(config.arm);
  GridSearchResult out;
  double best = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig c = config;
    c.alpha = grid[i];
    PredictionSink point_sink;
    if (sink) {
      point_sink = [&sink, i](const SubjectData& s, const Eigen::MatrixXd& probs) { sink(i, s, probs); };
    }
    ArmResult r = run_arm(dataset, c, plan, point_sink);
    const double score = r.mean_val_macro_f1();
    if (score > best) {
      best = score;
      out.best_index = i;
      out.best_alpha = grid[i];
    }
    out.points.push_back({grid[i], std::move(r)});
  }
  return out;
}

std::string report_header() {
  std::string s = "model,alpha";
  for (const auto name : kMetricNames) {
    if (name == "acs") break;
    s += ',';
    s += name;
  }
  return s + ",acs_mean,acs_std";
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::string s = report_header() + '\n';
  for (const auto& row : rows) {
    s += row.model + ',' + (row.alpha ? io::format_double(*row.alpha) : std::string("-"));
    for (std::size_t i = 0; i < kNumMetrics; ++i) {
      s += ',' + io::format_double(row.report.summary[i].mean);
    }
    s += ',' + io::format_double(row.report["acs"].std) + '\n';
  }
  return s;
}

void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& destination) {
  if (rows.empty()) throw ValidationError("emit_report: no rows");
  io::write_file_atomic(destination, format_report(rows));
}

std::string format_manifest(const Manifest& entries, const std::vector<std::string>& comments) {
  std::string s;
  for (const auto& c : comments) s += "# " + c + '\n';
  for (const auto& [k, v] : entries) s += k + '=' + v + '\n';
  return s;
}

std::string_view build_commit() noexcept { return MULTISCORE_GIT_COMMIT; }
std::string_view toolkit_version() noexcept { return MULTISCORE_VERSION; }

}  // namespace multiscore
