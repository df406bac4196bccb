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

// Command-line front end: consensus, synth, experiment and plot pipelines.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "multiscore/consensus.hpp"
#include "multiscore/errors.hpp"
#include "multiscore/harness.hpp"
#include "multiscore/io.hpp"
#include "multiscore/metrics.hpp"
#include "multiscore/records.hpp"
#include "multiscore/synthgen.hpp"
#include "multiscore/viz.hpp"

namespace fs = std::filesystem;
using namespace multiscore;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MULTISCORE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring non-numeric MULTISCORE_SEED\n";
    }
  }
  return 0;
}

std::string arm_key(Arm arm) {
  switch (arm) {
    case Arm::base: return "base";
    case Arm::ls_u: return "ls_u";
    case Arm::ls_sc: return "ls_sc";
  }
  return "base";
}

std::string fmt(double v) { return io::format_double(v); }

// Replaces `--config FILE` with the file's `key=value` lines as `--key=value`
// tokens placed right after the subcommand, so explicit options still win.
std::vector<std::string> expand_manifest(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    std::size_t consumed = 1;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      file = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      continue;
    }
    std::vector<std::string> expanded;
    std::string text;
    try {
      text = io::read_file(file);
    } catch (const Error&) {
      throw CLI::FileError::Missing(file);
    }
    for (const auto& line : io::split(text, '\n')) {
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CLI::ConversionError("manifest line without '=': " + line);
      expanded.push_back("--" + line);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    std::size_t at = 0;
    while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
    const auto pos = args.begin() + static_cast<std::ptrdiff_t>(std::min(at + 1, args.size()));
    args.insert(pos, expanded.begin(), expanded.end());
    break;
  }
  return args;
}

void write_manifest(const fs::path& out_dir, std::string_view subcommand, const Manifest& entries) {
  const std::vector<std::string> comments = {
      "multiscore run manifest; rerun with: multiscore " + std::string(subcommand) +
          " --config <this file>",
      "subcommand: " + std::string(subcommand),
      "version: " + std::string(toolkit_version()),
      "commit: " + std::string(build_commit())};
  io::write_file_atomic(out_dir / "manifest.txt", format_manifest(entries, comments));
}

// ---------------------------------------------------------------- consensus

struct ConsensusOptions {
  std::string labels;
  std::string out = "consensus_out";
};

int run_consensus(const ConsensusOptions& o) {
  const fs::path out(o.out);
  fs::create_directories(out);
  auto records = parse_labels(io::read_file(o.labels));
  std::vector<ConsensusHypnogram> hypnograms;
  std::map<std::string, std::vector<double>> sa_by_scorer;
  std::vector<std::string> scorer_order;
  std::string by_subject = "subject,scorer,rank,soft_agreement\n";
  for (auto& raw : records) {
    const MultiScoredRecord rec = drop_unclassified(raw);
    validate(rec);
    const ScorerRanking ranking = rank_scorers(rec);
    const ConsensusHypnogram cons = majority_vote(rec, ranking);
    const SoftConsensusMatrix sc = soft_consensus(rec);
    const fs::path dir = out / rec.subject_id;
    fs::create_directories(dir);
    io::write_file_atomic(dir / "consensus.csv", serialize_consensus({cons}));
    io::write_file_atomic(dir / "soft_consensus.csv",
                          serialize_distribution_table(rec.subject_id, sc.values));
    std::string rank_table = "rank,scorer,soft_agreement\n";
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
      const auto& e = ranking.entries[r];
      rank_table += std::to_string(r + 1) + ',' + e.scorer_id + ',' + fmt(e.soft_agreement) + '\n';
      by_subject += rec.subject_id + ',' + e.scorer_id + ',' + std::to_string(r + 1) + ',' +
                    fmt(e.soft_agreement) + '\n';
      if (!sa_by_scorer.count(e.scorer_id)) scorer_order.push_back(e.scorer_id);
      sa_by_scorer[e.scorer_id].push_back(e.soft_agreement);
    }
    io::write_file_atomic(dir / "ranking.csv", rank_table);
    hypnograms.push_back(cons);
  }
  io::write_file_atomic(out / "consensus.csv", serialize_consensus(hypnograms));
  io::write_file_atomic(out / "soft_agreement_by_subject.csv", by_subject);

  // Cohort summary: mean SA per scorer, then the average over scorers.
  std::sort(scorer_order.begin(), scorer_order.end());
  std::string summary = "scorer,sa\n";
  double total = 0.0;
  for (const auto& id : scorer_order) {
    const auto& v = sa_by_scorer[id];
    double m = 0.0;
    for (const double x : v) m += x;
    m /= static_cast<double>(v.size());
    total += m;
    summary += id + ',' + fmt(m) + '\n';
  }
  if (!scorer_order.empty()) summary += "Average," + fmt(total / static_cast<double>(scorer_order.size())) + '\n';
  io::write_file_atomic(out / "soft_agreement.csv", summary);
  write_manifest(out, "consensus", {{"labels", o.labels}, {"out", o.out}});
  std::cout << "consensus: " << records.size() << " subject(s) written to " << o.out << '\n';
  return 0;
}

// -------------------------------------------------------------------- synth

struct SynthOptions {
  std::string out = "synth_out";
  std::size_t subjects = 40;
  std::size_t epochs = 960;
  std::size_t scorers = 5;
  std::size_t features = 8;
  double separation = 1.0;
  double noise = 0.5;
  double diagonal = 0.8;
  double target_sa = 0.0;
  std::size_t pilot_subjects = 10;
  std::uint64_t seed = 0;
};

int run_synth(const SynthOptions& o) {
  GeneratorSpec spec = default_spec(o.seed);
  spec.subjects = o.subjects;
  spec.epochs = o.epochs;
  spec.scorers = o.scorers;
  spec.feature_dim = o.features;
  spec.class_means = axis_class_means(o.features, o.separation);
  spec.noise_scale = o.noise;
  spec.confusions.assign(spec.scorers, symmetric_confusion(o.diagonal));
  validate(spec);

  double diagonal = o.diagonal;
  if (o.target_sa > 0.0) {
    const CalibrationOutcome cal = calibrate_agreement(o.target_sa, spec, o.pilot_subjects);
    spec = cal.spec;
    diagonal = cal.diagonal;
    std::cout << "calibration: target SA " << o.target_sa << ", pilot SA " << cal.achieved
              << ", confusion diagonal " << cal.diagonal << '\n';
  }
  const auto cohort = generate_cohort(spec);
  std::vector<MultiScoredRecord> records;
  std::vector<FeatureMatrix> features;
  std::vector<Hypnogram> latent;
  for (const auto& s : cohort) {
    records.push_back(s.record);
    features.push_back(s.features);
    latent.push_back(s.latent);
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  io::write_file_atomic(out / "labels.csv", serialize_labels(records));
  io::write_file_atomic(out / "features.csv", serialize_features(features));
  io::write_file_atomic(out / "latent.csv", serialize_hypnograms(latent));
  const double realized = mean_soft_agreement(records);
  std::cout << "synth: " << records.size() << " subjects, realized mean SA " << realized << '\n';
  write_manifest(out, "synth",
                 {{"out", o.out},
                  {"subjects", std::to_string(o.subjects)},
                  {"epochs", std::to_string(o.epochs)},
                  {"scorers", std::to_string(o.scorers)},
                  {"features", std::to_string(o.features)},
                  {"separation", fmt(o.separation)},
                  {"noise", fmt(o.noise)},
                  {"diagonal", fmt(o.diagonal)},
                  {"target-sa", fmt(o.target_sa)},
                  {"pilot-subjects", std::to_string(o.pilot_subjects)},
                  {"seed", std::to_string(o.seed)}});
  io::write_file_atomic(out / "generator.txt",
                        "confusion_diagonal=" + fmt(diagonal) + "\nrealized_mean_sa=" +
                            fmt(realized) + '\n');
  return 0;
}

// --------------------------------------------------------------- experiment

struct ExperimentOptions {
  std::string data;
  std::string out = "experiment_out";
  std::string arms = "base,ls_u,ls_sc";
  double alpha_u = 0.4;
  double alpha_sc = 0.6;
  bool alpha_grid = false;
  std::size_t folds = 5;
  std::size_t val = 6;
  std::size_t test = 8;
  std::uint64_t seed = 0;
  std::size_t hidden = 32;
  double dropout = 0.3;
  std::size_t context = 1;
  double lr = 1e-3;
  std::size_t batch = 128;
  std::size_t max_iter = 100;
  std::size_t patience = 10;
  std::size_t ece_bins = kDefaultEceBins;
  std::size_t mc_passes = 0;
  std::size_t plots = 2;
};

struct ArmOutcome {
  Arm arm;
  std::vector<ReportRow> rows;
  ArmResult chosen;
  std::optional<GridSearchResult> grid;
};

std::string per_subject_rows(const std::string& model, double alpha,
                             const std::vector<SubjectMetrics>& rows) {
  std::string s;
  for (const auto& r : rows) {
    s += model + ',' + fmt(alpha) + ',' + r.subject_id;
    for (const double v : r.values()) s += ',' + fmt(v);
    s += '\n';
  }
  return s;
}

int run_experiment(const ExperimentOptions& o) {
  const fs::path data(o.data);
  const auto records = parse_labels(io::read_file(data / "labels.csv"));
  const auto features = parse_features(io::read_file(data / "features.csv"));
  const auto dataset = prepare_dataset(records, features);
  std::vector<std::string> ids;
  for (const auto& s : dataset) ids.push_back(s.record.subject_id);
  const FoldPlan plan = make_folds(ids, o.folds, o.val, o.test, o.seed);

  std::vector<Arm> arms;
  for (const auto& a : io::split(o.arms, ',')) arms.push_back(parse_arm(a));

  ExperimentConfig base_cfg;
  base_cfg.hidden_width = o.hidden;
  base_cfg.dropout_rate = o.dropout;
  base_cfg.context = o.context;
  base_cfg.train.lr = o.lr;
  base_cfg.train.batch_size = o.batch;
  base_cfg.train.max_iterations = o.max_iter;
  base_cfg.train.patience = o.patience;
  base_cfg.ece_bins = o.ece_bins;
  base_cfg.mc_passes = o.mc_passes;
  base_cfg.seed = o.seed;

  const fs::path out(o.out);
  fs::create_directories(out / "plots");
  std::set<std::string> plot_subjects;
  {
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < std::min(o.plots, sorted.size()); ++i) plot_subjects.insert(sorted[i]);
  }
  std::map<std::string, const SubjectData*> by_id;
  for (const auto& s : dataset) by_id[s.record.subject_id] = &s;
  for (const auto& id : plot_subjects) {
    const SubjectData& s = *by_id.at(id);
    emit_hypnogram({id, "consensus", s.consensus.stages}, out / "plots" / (id + "_hypnogram.svg"));
    emit_hypnodensity({id, DensitySource::soft_consensus, s.soft.values},
                      out / "plots" / (id + "_soft_consensus.svg"));
  }

  std::vector<ArmOutcome> outcomes;
  std::string per_subject = "model,alpha,subject";
  for (const auto name : kMetricNames) per_subject += ',' + std::string(name);
  per_subject += '\n';
  std::string grid_table = "model,alpha,mean_val_mf1,test_mf1,test_ece,test_acs,selected\n";
  std::string fold_log = "model,alpha,fold,iterations,best_check,best_val_mf1,stop_reason,error\n";
  bool any_arm_failed = false;

  for (const Arm arm : arms) {
    ExperimentConfig cfg = base_cfg;
    cfg.arm = arm;
    cfg.alpha = arm == Arm::ls_u ? o.alpha_u : arm == Arm::ls_sc ? o.alpha_sc : 0.0;
    ArmOutcome outcome{arm, {}, {}, std::nullopt};
    const std::string model = std::string(to_string(arm));

    auto plot = [&](const SubjectData& s, const Eigen::MatrixXd& probs) {
      emit_hypnodensity({s.record.subject_id, DensitySource::model_probs, probs},
                        out / "plots" / (s.record.subject_id + '_' + arm_key(arm) + ".svg"),
                        s.soft.values);
    };
    auto sink = [&](const SubjectData& s, const Eigen::MatrixXd& probs) {
      if (plot_subjects.count(s.record.subject_id)) plot(s, probs);
    };

    auto log_folds = [&](const ArmResult& r) {
      for (const auto& f : r.folds) {
        fold_log += model + ',' + fmt(r.alpha) + ',' + std::to_string(f.index) + ',' +
                    std::to_string(f.history.train_loss.size()) + ',' +
                    std::to_string(f.history.best_check) + ',' + fmt(f.best_val_macro_f1) + ',' +
                    std::string(to_string(f.history.stop_reason)) + ',' + f.error + '\n';
        if (!f.error.empty()) std::cerr << model << " fold " << f.index << ": " << f.error << '\n';
      }
    };
    auto add_rows = [&](const ArmResult& r, std::optional<double> alpha) {
      if (r.rows.empty()) return;
      outcome.rows.push_back({model, alpha, aggregate(r.rows)});
      per_subject += per_subject_rows(model, r.alpha, r.rows);
    };

    if (o.alpha_grid && arm != Arm::base) {
      // Plot-subject predictions of every grid point; only the selected one is drawn.
      std::map<std::size_t, std::vector<std::pair<const SubjectData*, Eigen::MatrixXd>>> held;
      GridSearchResult grid = grid_search_alpha(
          dataset, cfg, plan, {},
          [&](std::size_t point, const SubjectData& s, const Eigen::MatrixXd& probs) {
            if (plot_subjects.count(s.record.subject_id)) held[point].emplace_back(&s, probs);
          });
      for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const auto& p = grid.points[i];
        log_folds(p.result);
        add_rows(p.result, p.alpha);
        grid_table += model + ',' + fmt(p.alpha) + ',' + fmt(p.result.mean_val_macro_f1());
        if (p.result.rows.empty()) {
          grid_table += ",NA,NA,NA";
        } else {
          const auto agg = aggregate(p.result.rows);
          grid_table += ',' + fmt(agg["mf1"].mean) + ',' + fmt(agg["ece"].mean) + ',' +
                        fmt(agg["acs"].mean);
        }
        grid_table += std::string(",") + (i == grid.best_index ? "1" : "0") + '\n';
      }
      for (const auto& [s, probs] : held[grid.best_index]) plot(*s, probs);
      outcome.chosen = grid.points[grid.best_index].result;
      outcome.grid = std::move(grid);
    } else {
      outcome.chosen = run_arm(dataset, cfg, plan, sink);
      log_folds(outcome.chosen);
      add_rows(outcome.chosen, arm == Arm::base ? std::nullopt : std::optional<double>(cfg.alpha));
    }
    if (!outcome.chosen.mc_rows.empty()) {
      outcome.rows.push_back({model + " w/ MC",
                              arm == Arm::base ? std::nullopt : std::optional<double>(outcome.chosen.alpha),
                              aggregate(outcome.chosen.mc_rows)});
      per_subject += per_subject_rows(model + " w/ MC", outcome.chosen.alpha, outcome.chosen.mc_rows);
    }
    if (outcome.chosen.failed_folds() == outcome.chosen.folds.size()) any_arm_failed = true;
    outcomes.push_back(std::move(outcome));
  }

  std::vector<ReportRow> report;
  for (const auto& oc : outcomes) report.insert(report.end(), oc.rows.begin(), oc.rows.end());
  if (report.empty()) {
    std::cerr << "experiment: every arm failed\n";
    return kExitRuntime;
  }
  emit_report(report, out / "report.csv");
  io::write_file_atomic(out / "per_subject.csv", per_subject);
  io::write_file_atomic(out / "folds.csv", fold_log);
  if (o.alpha_grid) io::write_file_atomic(out / "grid.csv", grid_table);

  // Paired tests of every arm against every earlier arm on shared subjects.
  std::string pvalues = "arm_a,arm_b,metric,n,p_value\n";
  for (std::size_t a = 0; a < outcomes.size(); ++a) {
    for (std::size_t b = a + 1; b < outcomes.size(); ++b) {
      std::map<std::string, const SubjectMetrics*> rows_b;
      for (const auto& r : outcomes[b].chosen.rows) rows_b[r.subject_id] = &r;
      for (const std::string_view metric : {"acs", "mf1", "acc", "kappa", "ece"}) {
        const std::size_t mi = metric_index(metric);
        std::vector<double> va, vb;
        for (const auto& r : outcomes[a].chosen.rows) {
          const auto it = rows_b.find(r.subject_id);
          if (it == rows_b.end()) continue;
          va.push_back(r.values()[mi]);
          vb.push_back(it->second->values()[mi]);
        }
        const std::string p = va.size() >= 5 ? fmt(paired_test(va, vb)) : std::string("NA");
        pvalues += std::string(to_string(outcomes[a].arm)) + ',' +
                   std::string(to_string(outcomes[b].arm)) + ',' + std::string(metric) + ',' +
                   std::to_string(va.size()) + ',' + p + '\n';
      }
    }
  }
  io::write_file_atomic(out / "pvalues.csv", pvalues);

  write_manifest(out, "experiment",
                 {{"data", o.data},
                  {"out", o.out},
                  {"arms", o.arms},
                  {"alpha-u", fmt(o.alpha_u)},
                  {"alpha-sc", fmt(o.alpha_sc)},
                  {"alpha-grid", o.alpha_grid ? "true" : "false"},
                  {"folds", std::to_string(o.folds)},
                  {"val", std::to_string(o.val)},
                  {"test", std::to_string(o.test)},
                  {"seed", std::to_string(o.seed)},
                  {"hidden", std::to_string(o.hidden)},
                  {"dropout", fmt(o.dropout)},
                  {"context", std::to_string(o.context)},
                  {"lr", fmt(o.lr)},
                  {"batch", std::to_string(o.batch)},
                  {"max-iter", std::to_string(o.max_iter)},
                  {"patience", std::to_string(o.patience)},
                  {"ece-bins", std::to_string(o.ece_bins)},
                  {"mc-passes", std::to_string(o.mc_passes)},
                  {"plots", std::to_string(o.plots)}});

  std::cout << format_report(report);
  return any_arm_failed ? kExitRuntime : 0;
}

// --------------------------------------------------------------------- plot

struct PlotOptions {
  std::string labels;
  std::string subject;
  std::string probs;
  std::string out = "plot_out";
};

int run_plot(const PlotOptions& o) {
  const auto records = parse_labels(io::read_file(o.labels));
  const MultiScoredRecord* found = nullptr;
  for (const auto& r : records) {
    if (o.subject.empty() || r.subject_id == o.subject) {
      found = &r;
      break;
    }
  }
  if (!found) throw ValidationError("subject " + o.subject + " not in " + o.labels);
  const MultiScoredRecord rec = drop_unclassified(*found);
  const auto cons = majority_vote(rec, rank_scorers(rec));
  const auto sc = soft_consensus(rec);
  const fs::path out(o.out);
  fs::create_directories(out);
  emit_hypnogram({rec.subject_id, "consensus", cons.stages}, out / (rec.subject_id + "_hypnogram.svg"));
  emit_hypnodensity({rec.subject_id, DensitySource::soft_consensus, sc.values},
                    out / (rec.subject_id + "_soft_consensus.svg"));
  Manifest m = {{"labels", o.labels}, {"subject", rec.subject_id}, {"out", o.out}};
  if (!o.probs.empty()) {
    const Eigen::MatrixXd probs = parse_distribution_table(io::read_file(o.probs));
    emit_hypnodensity({rec.subject_id, DensitySource::model_probs, probs},
                      out / (rec.subject_id + "_model.svg"), sc.values);
    std::cout << "ACS " << acs(sc.values, probs) << '\n';
    m.push_back({"probs", o.probs});
  }
  write_manifest(out, "plot", m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiscore: multi-scorer consensus, soft-consensus label smoothing and "
               "hypnodensity metrics"};
  app.set_version_flag("--version", std::string(toolkit_version()));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ConsensusOptions co;
  auto* cons = app.add_subcommand("consensus", "Rank scorers, build consensus and soft-consensus");
  cons->add_option("--config", "Re-run from a manifest.txt (explicit options win)");
  cons->add_option("--labels", co.labels, "Label table (subject,epoch,scorer...)")
      ->required()
      ->check(CLI::ExistingFile);
  cons->add_option("--out", co.out, "Output directory")->capture_default_str();

  SynthOptions so;
  so.seed = default_seed();
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-scorer cohort");
  synth->add_option("--config", "Re-run from a manifest.txt (explicit options win)");
  synth->add_option("--out", so.out, "Output directory")->capture_default_str();
  synth->add_option("--subjects", so.subjects)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--epochs", so.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--scorers", so.scorers)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--features", so.features, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--separation", so.separation, "Distance of class means from the origin")->capture_default_str();
  synth->add_option("--noise", so.noise, "Feature noise standard deviation")->capture_default_str();
  synth->add_option("--diagonal", so.diagonal, "Shared confusion diagonal when not calibrating")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--target-sa", so.target_sa, "Calibrate scorers to this mean Soft-Agreement")
      ->capture_default_str();
  synth->add_option("--pilot-subjects", so.pilot_subjects)->capture_default_str();
  synth->add_option("--seed", so.seed, "Random seed (default from MULTISCORE_SEED)")->capture_default_str();

  ExperimentOptions eo;
  eo.seed = default_seed();
  auto* exp = app.add_subcommand("experiment", "Cross-validated base / LS_U / LS_SC comparison");
  exp->add_option("--config", "Re-run from a manifest.txt (explicit options win)");
  exp->add_option("--data", eo.data, "Dataset directory with labels.csv and features.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  exp->add_option("--out", eo.out, "Output directory")->capture_default_str();
  exp->add_option("--arms", eo.arms, "Comma-separated arms: base, ls_u, ls_sc")->capture_default_str();
  exp->add_option("--alpha-u", eo.alpha_u, "Uniform smoothing weight")->capture_default_str();
  exp->add_option("--alpha-sc", eo.alpha_sc, "Soft-consensus smoothing weight")->capture_default_str();
  exp->add_flag("--alpha-grid", eo.alpha_grid, "Grid-search alpha for smoothing arms");
  exp->add_option("--folds", eo.folds)->capture_default_str();
  exp->add_option("--val", eo.val, "Validation subjects per fold")->capture_default_str();
  exp->add_option("--test", eo.test, "Test subjects per fold")->capture_default_str();
  exp->add_option("--seed", eo.seed, "Random seed (default from MULTISCORE_SEED)")->capture_default_str();
  exp->add_option("--hidden", eo.hidden, "Hidden width, 0 for linear softmax")->capture_default_str();
  exp->add_option("--dropout", eo.dropout)->capture_default_str();
  exp->add_option("--context", eo.context, "Neighbour epochs on each side")->capture_default_str();
  exp->add_option("--lr", eo.lr)->capture_default_str();
  exp->add_option("--batch", eo.batch)->capture_default_str();
  exp->add_option("--max-iter", eo.max_iter, "Iteration cap (passes over the training set)")->capture_default_str();
  exp->add_option("--patience", eo.patience)->capture_default_str();
  exp->add_option("--ece-bins", eo.ece_bins)->capture_default_str();
  exp->add_option("--mc-passes", eo.mc_passes, "MC-dropout passes; adds a w/ MC row per arm")->capture_default_str();
  exp->add_option("--plots", eo.plots, "Subjects to render hypnodensity graphs for")->capture_default_str();

  PlotOptions po;
  auto* plot = app.add_subcommand("plot", "Render hypnogram and hypnodensity SVGs");
  plot->add_option("--config", "Re-run from a manifest.txt (explicit options win)");
  plot->add_option("--labels", po.labels)->required()->check(CLI::ExistingFile);
  plot->add_option("--subject", po.subject, "Subject id (default: first)");
  plot->add_option("--probs", po.probs, "Model probability table to overlay")->check(CLI::ExistingFile);
  plot->add_option("--out", po.out)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_manifest(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*cons) return run_consensus(co);
    if (*synth) return run_synth(so);
    if (*exp) return run_experiment(eo);
    if (*plot) return run_plot(po);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << " (achieved bracket [" << e.achieved_low()
              << ", " << e.achieved_high() << "])\n";
    return kExitData;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitData;
  } catch (const AlignmentError& e) {
    std::cerr << "alignment error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitData;
  } catch (const UndefinedAgreementError& e) {
    std::cerr << "agreement error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
