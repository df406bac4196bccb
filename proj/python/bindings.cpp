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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "multiscore/consensus.hpp"
#include "multiscore/errors.hpp"
#include "multiscore/harness.hpp"
#include "multiscore/metrics.hpp"
#include "multiscore/records.hpp"
#include "multiscore/smoothing.hpp"
#include "multiscore/synthgen.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace multiscore;

namespace {

std::vector<SleepStage> to_stages(const std::vector<std::string>& tokens) {
  std::vector<SleepStage> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(parse_stage(t));
  return out;
}

std::vector<std::string> to_tokens(const std::vector<SleepStage>& stages) {
  std::vector<std::string> out;
  out.reserve(stages.size());
  for (const auto s : stages) out.emplace_back(to_string(s));
  return out;
}

StageDistribution to_dist(const std::vector<double>& v) {
  if (v.size() != kNumClasses) {
    throw ValidationError("expected a length-5 vector, got length " + std::to_string(v.size()));
  }
  StageDistribution d{};
  std::copy(v.begin(), v.end(), d.begin());
  return d;
}

std::vector<double> from_dist(const StageDistribution& d) { return {d.begin(), d.end()}; }

MultiScoredRecord make_py_record(const std::string& subject_id,
                                 const std::vector<std::string>& scorer_ids,
                                 const std::vector<std::vector<std::string>>& annotations) {
  if (scorer_ids.size() != annotations.size()) {
    throw ValidationError("one scorer id per annotation row is required");
  }
  std::vector<Hypnogram> hyps;
  for (std::size_t j = 0; j < annotations.size(); ++j) {
    hyps.push_back({subject_id, scorer_ids[j], to_stages(annotations[j])});
  }
  return make_record(hyps);
}

py::dict metrics_dict(const SubjectMetrics& m) {
  py::dict d;
  d["subject"] = m.subject_id;
  const auto v = m.values();
  for (std::size_t i = 0; i < kNumMetrics; ++i) d[py::str(std::string(kMetricNames[i]))] = v[i];
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = R"pbdoc(
    multiscore core bindings
    ------------------------

    Consensus, soft-consensus smoothing, metrics, synthetic cohorts and the
    cross-validation harness.
  )pbdoc";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<AlignmentError>(m, "AlignmentError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UndefinedAgreementError>(m, "UndefinedAgreementError", PyExc_ValueError);
  py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_RuntimeError);

  m.attr("STAGES") = py::make_tuple("W", "N1", "N2", "N3", "R");

  py::class_<MultiScoredRecord>(m, "Record")
      .def(py::init(&make_py_record), py::arg("subject_id"), py::arg("scorer_ids"),
           py::arg("annotations"))
      .def_readonly("subject_id", &MultiScoredRecord::subject_id)
      .def_readonly("scorer_ids", &MultiScoredRecord::scorer_ids)
      .def_property_readonly("annotations",
                             [](const MultiScoredRecord& r) {
                               std::vector<std::vector<std::string>> out;
                               for (const auto& a : r.annotations) out.push_back(to_tokens(a));
                               return out;
                             })
      .def_property_readonly("epoch_mask",
                             [](const MultiScoredRecord& r) {
                               return std::vector<bool>(r.epoch_mask.begin(), r.epoch_mask.end());
                             })
      .def_property_readonly("num_epochs", &MultiScoredRecord::num_epochs)
      .def_property_readonly("num_scorers", &MultiScoredRecord::num_scorers)
      .def_property_readonly("retained_count", &MultiScoredRecord::retained_count)
      .def("__repr__", [](const MultiScoredRecord& r) {
        return "<Record " + r.subject_id + " J=" + std::to_string(r.num_scorers()) +
               " T=" + std::to_string(r.num_epochs()) + ">";
      });

  m.def("parse_labels", [](const std::string& text) { return parse_labels(text); },
        py::arg("text"), "Parse a subject,epoch,scorer... label table.");
  m.def("serialize_labels", &serialize_labels, py::arg("records"));
  m.def("drop_unclassified", &drop_unclassified, py::arg("record"));

  m.def(
      "leave_one_out_consensus",
      [](const MultiScoredRecord& r, std::size_t j) {
        const auto z = leave_one_out_consensus(r, j);
        std::vector<std::vector<double>> rows;
        for (const auto& row : z.rows) rows.push_back(from_dist(row));
        return rows;
      },
      py::arg("record"), py::arg("scorer"));
  m.def("soft_agreement", &soft_agreement, py::arg("record"), py::arg("scorer"));
  m.def(
      "rank_scorers",
      [](const MultiScoredRecord& r) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& e : rank_scorers(r).entries) out.emplace_back(e.scorer_id, e.soft_agreement);
        return out;
      },
      py::arg("record"), "Scorers with their Soft-Agreement, most reliable first.");
  m.def(
      "majority_vote",
      [](const MultiScoredRecord& r) {
        const auto c = majority_vote(r, rank_scorers(r));
        return py::make_tuple(to_tokens(c.stages),
                              std::vector<bool>(c.tiebreak_flags.begin(), c.tiebreak_flags.end()));
      },
      py::arg("record"), "Consensus stages and tie-break flags over retained epochs.");
  m.def("soft_consensus", [](const MultiScoredRecord& r) { return soft_consensus(r).values; },
        py::arg("record"));

  m.def(
      "uniform_smooth",
      [](const std::vector<double>& onehot, double alpha) {
        return from_dist(uniform_smooth(to_dist(onehot), alpha).values);
      },
      py::arg("onehot"), py::arg("alpha"));
  m.def(
      "sc_smooth",
      [](const std::vector<double>& onehot, double alpha, const std::vector<double>& sc_row) {
        return from_dist(sc_smooth(to_dist(onehot), alpha, to_dist(sc_row)).values);
      },
      py::arg("onehot"), py::arg("alpha"), py::arg("sc_row"));
  m.def(
      "cross_entropy",
      [](const std::vector<double>& target, const std::vector<double>& probs) {
        return cross_entropy(to_dist(target), to_dist(probs));
      },
      py::arg("target"), py::arg("probs"));
  m.def(
      "cross_entropy_grad",
      [](const std::vector<double>& target, const std::vector<double>& logits) {
        return from_dist(cross_entropy_grad(to_dist(target), to_dist(logits)));
      },
      py::arg("target"), py::arg("logits"));

  m.def(
      "classification_scores",
      [](const std::vector<std::string>& truth, const std::vector<std::string>& predicted) {
        const auto t = to_stages(truth);
        const auto p = to_stages(predicted);
        const auto s = classification_scores(confusion(t, p));
        py::dict d;
        d["accuracy"] = s.accuracy;
        d["per_class_f1"] = from_dist(s.per_class_f1);
        d["macro_f1"] = s.macro_f1;
        d["weighted_f1"] = s.weighted_f1;
        d["kappa"] = s.kappa;
        return d;
      },
      py::arg("truth"), py::arg("predicted"));
  m.def(
      "ece",
      [](const Eigen::MatrixXd& probs, const std::vector<std::string>& truth, std::size_t bins) {
        const auto stages = to_stages(truth);
        return ece(probs, stages, bins).ece;
      },
      py::arg("probs"), py::arg("truth"), py::arg("bins") = kDefaultEceBins);
  m.def("mean_confidence", &mean_confidence, py::arg("probs"));
  m.def("acs", &acs, py::arg("reference"), py::arg("probs"));
  m.def(
      "paired_test",
      [](const std::vector<double>& a, const std::vector<double>& b) { return paired_test(a, b); },
      py::arg("a"), py::arg("b"), "Two-sided Wilcoxon signed-rank p-value.");

  m.def(
      "make_folds",
      [](const std::vector<std::string>& ids, std::size_t k, std::size_t val, std::size_t test,
         std::uint64_t seed) {
        const auto plan = make_folds(ids, k, val, test, seed);
        py::list folds;
        for (const auto& f : plan.folds) {
          py::dict d;
          d["train"] = f.train;
          d["validation"] = f.validation;
          d["test"] = f.test;
          folds.append(d);
        }
        return folds;
      },
      py::arg("subject_ids"), py::arg("k"), py::arg("val_count"), py::arg("test_count"),
      py::arg("seed") = 0);
  m.def(
      "alpha_grid", [](const std::string& arm) { return alpha_grid(parse_arm(arm)); },
      py::arg("arm"));

  m.def(
      "generate_cohort",
      [](std::size_t subjects, std::size_t epochs, std::size_t scorers, double diagonal,
         std::uint64_t seed) {
        GeneratorSpec spec = default_spec(seed);
        spec.subjects = subjects;
        spec.epochs = epochs;
        spec.scorers = scorers;
        spec.confusions.assign(scorers, symmetric_confusion(diagonal));
        py::list out;
        for (const auto& s : generate_cohort(spec)) {
          out.append(py::make_tuple(s.record, s.features.values, to_tokens(s.latent.stages)));
        }
        return out;
      },
      py::arg("subjects") = 40, py::arg("epochs") = 960, py::arg("scorers") = 5,
      py::arg("diagonal") = 0.8, py::arg("seed") = 0,
      "List of (record, features, latent stages) tuples.");
  m.def(
      "calibrate_agreement",
      [](double target, std::size_t epochs, std::size_t scorers, std::uint64_t seed,
         std::size_t pilot_subjects) {
        GeneratorSpec spec = default_spec(seed);
        spec.epochs = epochs;
        spec.scorers = scorers;
        spec.confusions.assign(scorers, symmetric_confusion(0.8));
        const auto out = calibrate_agreement(target, spec, pilot_subjects);
        return py::make_tuple(out.diagonal, out.achieved);
      },
      py::arg("target"), py::arg("epochs") = 960, py::arg("scorers") = 5, py::arg("seed") = 0,
      py::arg("pilot_subjects") = 10, "Returns (confusion diagonal, pilot mean SA).");

  m.def(
      "run_arm",
      [](const std::vector<MultiScoredRecord>& records, const std::vector<Eigen::MatrixXd>& features,
         const std::string& arm, double alpha, std::size_t folds, std::size_t val,
         std::size_t test, std::uint64_t seed, std::size_t hidden, std::size_t max_iterations,
         std::size_t context) {
        if (records.size() != features.size()) {
          throw ValidationError("one feature matrix per record is required");
        }
        std::vector<FeatureMatrix> fms;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < records.size(); ++i) {
          fms.push_back({records[i].subject_id, features[i]});
          ids.push_back(records[i].subject_id);
        }
        const auto dataset = prepare_dataset(records, fms);
        ExperimentConfig cfg;
        cfg.arm = parse_arm(arm);
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.hidden_width = hidden;
        cfg.context = context;
        cfg.train.max_iterations = max_iterations;
        ArmResult result;
        {
          py::gil_scoped_release release;
          result = run_arm(dataset, cfg, make_folds(ids, folds, val, test, seed));
        }
        py::list rows;
        for (const auto& r : result.rows) rows.append(metrics_dict(r));
        return rows;
      },
      py::arg("records"), py::arg("features"), py::arg("arm") = "base", py::arg("alpha") = 0.0,
      py::arg("folds") = 5, py::arg("val_count") = 6, py::arg("test_count") = 8,
      py::arg("seed") = 0, py::arg("hidden") = 32, py::arg("max_iterations") = 100,
      py::arg("context") = 1, "Per-subject test metrics of one arm over all folds.");

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
