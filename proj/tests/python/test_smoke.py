# Copyright (c) 2026 The multiscore Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import multiscore as ms


def five_scorers():
    return ms.Record("A", ["s1", "s2", "s3", "s4", "s5"],
                     [["W"], ["W"], ["W"], ["N1"], ["N2"]])


def test_version_and_stages():
    assert ms.__version__
    assert ms.STAGES == ("W", "N1", "N2", "N3", "R")


def test_worked_example():
    rec = five_scorers()
    sc = ms.soft_consensus(rec)
    np.testing.assert_allclose(sc[0], [0.6, 0.2, 0.2, 0, 0], atol=1e-12)
    stages, flags = ms.majority_vote(rec)
    assert stages == ["W"]
    smoothed = ms.sc_smooth([1, 0, 0, 0, 0], 0.5, list(sc[0]))
    np.testing.assert_allclose(smoothed, [0.8, 0.1, 0.1, 0, 0], atol=1e-12)


def test_ranking_and_unclassified():
    rec = ms.Record("B", ["a", "b", "c"],
                    [["W", "N2", "NC"], ["W", "N2", "NC"], ["R", "N2", "NC"]])
    assert ms.drop_unclassified(rec).retained_count == 2
    ranked = ms.rank_scorers(rec)
    assert [s for s, _ in ranked][:2] == ["a", "b"]
    assert ranked[-1] == ("c", pytest.approx(0.5))


def test_label_round_trip():
    text = "subject,epoch,s1,s2\nA,0,W,N1\nA,1,R,R\n"
    records = ms.parse_labels(text)
    assert ms.parse_labels(ms.serialize_labels(records))[0].annotations == records[0].annotations
    with pytest.raises(ValueError):
        ms.parse_labels("subject,epoch,s1\nA,0,X\n")


def test_smoothing_sums_to_one():
    for alpha in (0.0, 0.3, 1.0):
        assert math.isclose(sum(ms.uniform_smooth([0, 0, 1, 0, 0], alpha)), 1.0)
    assert ms.cross_entropy([1, 0, 0, 0, 0], [0, 1, 0, 0, 0]) == pytest.approx(-math.log(1e-12))
    with pytest.raises(ValueError):
        ms.uniform_smooth([1, 0, 0, 0, 0], 1.5)


def test_metrics():
    s = ms.classification_scores(["W", "N1", "N2", "R"], ["W", "N1", "N2", "W"])
    assert s["accuracy"] == pytest.approx(0.75)
    probs = np.array([[0.9, 0.1, 0, 0, 0], [0.2, 0.8, 0, 0, 0]])
    assert ms.ece(probs, ["W", "W"]) == pytest.approx((abs(0.9 - 1) + abs(0.8 - 0)) / 2)
    assert ms.acs(probs, probs) == pytest.approx(1.0)
    p = ms.paired_test([1, 2, 3, 4, 5, 6, 7, 8, 9, 10], [0] * 10)
    assert p == pytest.approx(2 / 1024)


def test_folds():
    ids = [f"S{i:03d}" for i in range(70)]
    folds = ms.make_folds(ids, 10, 13, 7, seed=2)
    assert len(folds) == 10
    assert sorted(s for f in folds for s in f["test"]) == ids
    assert all(len(f["train"]) == 50 for f in folds)
    assert list(ms.alpha_grid("ls_u")) == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    with pytest.raises(ValueError):
        ms.make_folds(ids[:5], 2, 3, 3)


def test_cohort_and_arm():
    cohort = ms.generate_cohort(subjects=6, epochs=120, scorers=3, diagonal=0.8, seed=5)
    again = ms.generate_cohort(subjects=6, epochs=120, scorers=3, diagonal=0.8, seed=5)
    records = [r for r, _, _ in cohort]
    features = [f for _, f, _ in cohort]
    np.testing.assert_array_equal(features[0], again[0][1])
    assert features[0].shape[0] == 120
    rows = ms.run_arm(records, features, arm="ls_sc", alpha=0.5, folds=2, val_count=1,
                      test_count=2, seed=1, hidden=8, max_iterations=3)
    assert sorted(r["subject"] for r in rows) == [r.subject_id for r in records]
    for row in rows:
        assert 0.0 <= row["acs"] <= 1.0
        assert 0.0 <= row["ece"] <= 1.0


def test_calibration_failure():
    with pytest.raises(ValueError):
        ms.calibrate_agreement(0.05, epochs=120, scorers=3, seed=1, pilot_subjects=2)
    with pytest.raises(RuntimeError):
        ms.calibrate_agreement(0.31, epochs=120, scorers=3, seed=1, pilot_subjects=2)
