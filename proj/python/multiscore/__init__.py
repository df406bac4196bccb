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

"""Multi-scorer consensus, soft-consensus label smoothing and hypnodensity metrics."""

from ._core import (
    __version__,
    STAGES,
    Record,
    parse_labels,
    serialize_labels,
    drop_unclassified,
    leave_one_out_consensus,
    soft_agreement,
    rank_scorers,
    majority_vote,
    soft_consensus,
    uniform_smooth,
    sc_smooth,
    cross_entropy,
    cross_entropy_grad,
    classification_scores,
    ece,
    mean_confidence,
    acs,
    paired_test,
    make_folds,
    alpha_grid,
    generate_cohort,
    calibrate_agreement,
    run_arm,
)

__all__ = [
    "__version__",
    "STAGES",
    "Record",
    "parse_labels",
    "serialize_labels",
    "drop_unclassified",
    "leave_one_out_consensus",
    "soft_agreement",
    "rank_scorers",
    "majority_vote",
    "soft_consensus",
    "uniform_smooth",
    "sc_smooth",
    "cross_entropy",
    "cross_entropy_grad",
    "classification_scores",
    "ece",
    "mean_confidence",
    "acs",
    "paired_test",
    "make_folds",
    "alpha_grid",
    "generate_cohort",
    "calibrate_agreement",
    "run_arm",
]
