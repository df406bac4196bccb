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

#include "multiscore/records.hpp"

#include <cmath>
#include <map>
#include <string>

#include "multiscore/errors.hpp"
#include "multiscore/io.hpp"

namespace multiscore {

std::size_t MultiScoredRecord::retained_count() const noexcept {
  std::size_t n = 0;
  for (const bool keep : epoch_mask) n += keep ? 1 : 0;
  return n;
}

std::vector<std::size_t> MultiScoredRecord::retained_epochs() const {
  std::vector<std::size_t> out;
  out.reserve(epoch_mask.size());
  for (std::size_t t = 0; t < epoch_mask.size(); ++t) {
    if (epoch_mask[t]) out.push_back(t);
  }
  return out;
}

std::vector<SleepStage> MultiScoredRecord::epoch_labels(std::size_t t) const {
  std::vector<SleepStage> out;
  out.reserve(annotations.size());
  for (const auto& scorer : annotations) out.push_back(scorer.at(t));
  return out;
}

std::size_t MultiScoredRecord::observation_count(std::size_t t) const {
  std::size_t n = 0;
  for (const auto& scorer : annotations) n += is_scored(scorer.at(t)) ? 1 : 0;
  return n;
}

MultiScoredRecord make_record(const std::vector<Hypnogram>& hypnograms) {
  if (hypnograms.empty()) throw ValidationError("record needs at least one scorer");
  MultiScoredRecord rec;
  rec.subject_id = hypnograms.front().subject_id;
  const std::size_t T = hypnograms.front().stages.size();
  for (const auto& h : hypnograms) {
    if (h.subject_id != rec.subject_id) {
      throw ValidationError("hypnograms of different subjects: " + rec.subject_id + " vs " +
                            h.subject_id);
    }
    if (h.stages.size() != T) {
      throw AlignmentError("subject " + rec.subject_id + ": scorer " +
                           hypnograms.front().scorer_id + " has " + std::to_string(T) +
                           " epochs but scorer " + h.scorer_id + " has " +
                           std::to_string(h.stages.size()));
    }
    rec.scorer_ids.push_back(h.scorer_id);
    rec.annotations.push_back(h.stages);
  }
  rec.epoch_mask.assign(T, true);
  return rec;
}

void validate(const MultiScoredRecord& record) {
  if (record.annotations.empty()) throw ValidationError(record.subject_id + ": no scorers");
  if (record.scorer_ids.size() != record.annotations.size()) {
    throw ValidationError(record.subject_id + ": scorer id count does not match annotations");
  }
  for (const auto& a : record.annotations) {
    if (a.size() != record.epoch_mask.size()) {
      throw AlignmentError(record.subject_id + ": hypnogram lengths differ");
    }
  }
  for (std::size_t t = 0; t < record.num_epochs(); ++t) {
    if (record.epoch_mask[t] && record.observation_count(t) == 0) {
      throw ValidationError(record.subject_id + ": retained epoch " + std::to_string(t) +
                            " has no scored label");
    }
  }
}

namespace {

void require_header(const std::vector<io::CsvRow>& rows, std::size_t min_cols,
                    std::string_view what) {
  if (rows.empty()) throw ParseError(std::string(what) + " table is empty", 1);
  const auto& h = rows.front();
  if (h.fields.size() < min_cols || h.fields[0] != "subject" || h.fields[1] != "epoch") {
    throw ParseError(std::string(what) + " header must start with subject,epoch", h.line);
  }
}

// Groups data rows by subject, requiring contiguous blocks with epoch
// numbers increasing by one.
template <typename OnRow>
void for_each_subject_block(const std::vector<io::CsvRow>& rows, OnRow&& on_row) {
  std::map<std::string, bool> seen;
  std::string current;
  long long prev_epoch = -1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.fields.size() < 2) throw ParseError("row has too few fields", r.line);
    const std::string& subject = r.fields[0];
    if (subject.empty()) throw ParseError("empty subject id", r.line);
    const long long epoch = io::parse_int(r.fields[1], r.line);
    const bool first = (i == 1) || subject != current;
    if (first) {
      if (seen.count(subject)) {
        throw ParseError("rows of subject " + subject + " are not contiguous", r.line);
      }
      seen[subject] = true;
      current = subject;
    } else if (epoch != prev_epoch + 1) {
      throw ParseError("epoch " + std::to_string(epoch) + " does not follow " +
                           std::to_string(prev_epoch),
                       r.line);
    }
    prev_epoch = epoch;
    on_row(first, r);
  }
}

}  // namespace

std::vector<MultiScoredRecord> parse_labels(std::string_view text) {
  const auto rows = io::read_csv(text);
  require_header(rows, 3, "label");
  const auto& header = rows.front().fields;
  const std::size_t J = header.size() - 2;

  std::vector<MultiScoredRecord> out;
  std::vector<Hypnogram> current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(make_record(current));
    current.clear();
  };
  for_each_subject_block(rows, [&](bool first, const io::CsvRow& r) {
    if (r.fields.size() > header.size()) throw ParseError("row has more fields than header", r.line);
    if (first) {
      flush();
      for (std::size_t j = 0; j < J; ++j) current.push_back({r.fields[0], header[j + 2], {}});
    }
    for (std::size_t j = 0; j < J; ++j) {
      if (j + 2 >= r.fields.size() || r.fields[j + 2].empty()) continue;
      current[j].stages.push_back(parse_stage(r.fields[j + 2], r.line));
    }
  });
  flush();
  return out;
}

std::string serialize_labels(const std::vector<MultiScoredRecord>& records) {
  std::string s = "subject,epoch";
  if (!records.empty()) {
    for (const auto& id : records.front().scorer_ids) s += "," + id;
  }
  s += '\n';
  for (const auto& rec : records) {
    for (std::size_t t = 0; t < rec.num_epochs(); ++t) {
      s += rec.subject_id + ',' + std::to_string(t);
      for (const auto& scorer : rec.annotations) {
        s += ',';
        s += to_string(scorer[t]);
      }
      s += '\n';
    }
  }
  return s;
}

MultiScoredRecord drop_unclassified(const MultiScoredRecord& record) {
  MultiScoredRecord out = record;
  for (std::size_t t = 0; t < out.num_epochs(); ++t) {
    if (out.observation_count(t) == 0) out.epoch_mask[t] = false;
  }
  return out;
}

std::vector<FeatureMatrix> parse_features(std::string_view text) {
  const auto rows = io::read_csv(text);
  require_header(rows, 3, "feature");
  const std::size_t D = rows.front().fields.size() - 2;

  std::vector<FeatureMatrix> out;
  std::string subject;
  std::vector<double> buf;
  auto flush = [&] {
    if (subject.empty()) return;
    FeatureMatrix fm;
    fm.subject_id = subject;
    const auto T = static_cast<Eigen::Index>(buf.size() / D);
    fm.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        buf.data(), T, static_cast<Eigen::Index>(D));
    out.push_back(std::move(fm));
    buf.clear();
  };
  for_each_subject_block(rows, [&](bool first, const io::CsvRow& r) {
    if (r.fields.size() != D + 2) {
      throw ParseError("expected " + std::to_string(D + 2) + " fields, got " +
                           std::to_string(r.fields.size()),
                       r.line);
    }
    if (first) {
      flush();
      subject = r.fields[0];
    }
    for (std::size_t d = 0; d < D; ++d) {
      const double v = io::parse_double(r.fields[d + 2], r.line);
      if (!std::isfinite(v)) {
        throw ValidationError("line " + std::to_string(r.line) + ": non-finite feature value");
      }
      buf.push_back(v);
    }
  });
  flush();
  return out;
}

std::string serialize_features(const std::vector<FeatureMatrix>& features) {
  std::string s = "subject,epoch";
  const std::size_t D = features.empty() ? 0 : features.front().cols();
  for (std::size_t d = 0; d < D; ++d) s += ",f" + std::to_string(d + 1);
  s += '\n';
  for (const auto& fm : features) {
    for (Eigen::Index t = 0; t < fm.values.rows(); ++t) {
      s += fm.subject_id + ',' + std::to_string(t);
      for (Eigen::Index d = 0; d < fm.values.cols(); ++d) s += ',' + io::format_double(fm.values(t, d));
      s += '\n';
    }
  }
  return s;
}

void check_alignment(const FeatureMatrix& features, const MultiScoredRecord& record) {
  if (features.rows() != record.retained_count()) {
    throw AlignmentError("subject " + record.subject_id + ": " + std::to_string(features.rows()) +
                         " feature rows for " + std::to_string(record.retained_count()) +
                         " retained epochs");
  }
}

std::string serialize_hypnograms(const std::vector<Hypnogram>& hypnograms) {
  std::string s = "subject,epoch,stage\n";
  for (const auto& h : hypnograms) {
    for (std::size_t t = 0; t < h.stages.size(); ++t) {
      s += h.subject_id + ',' + std::to_string(t) + ',';
      s += to_string(h.stages[t]);
      s += '\n';
    }
  }
  return s;
}

std::vector<Hypnogram> parse_hypnograms(std::string_view text) {
  const auto rows = io::read_csv(text);
  require_header(rows, 3, "hypnogram");
  std::vector<Hypnogram> out;
  for_each_subject_block(rows, [&](bool first, const io::CsvRow& r) {
    if (r.fields.size() < 3) throw ParseError("missing stage column", r.line);
    if (first) out.push_back({r.fields[0], rows.front().fields[2], {}});
    out.back().stages.push_back(parse_stage(r.fields[2], r.line));
  });
  return out;
}

std::string serialize_distribution_table(std::string_view subject_id, const Eigen::MatrixXd& rows) {
  std::string s = "subject,epoch";
  for (const auto st : kClassStages) {
    s += ',';
    s += to_string(st);
  }
  s += '\n';
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    s += std::string(subject_id) + ',' + std::to_string(t);
    for (Eigen::Index k = 0; k < rows.cols(); ++k) s += ',' + io::format_double(rows(t, k));
    s += '\n';
  }
  return s;
}

Eigen::MatrixXd parse_distribution_table(std::string_view text) {
  const auto fms = parse_features(text);
  if (fms.size() != 1) throw ParseError("expected exactly one subject in distribution table", 0);
  if (fms.front().cols() != kNumClasses) {
    throw ParseError("distribution table needs " + std::to_string(kNumClasses) + " columns", 1);
  }
  return fms.front().values;
}

}  // namespace multiscore
