# Copyright 2026 The vmfmil Authors. All Rights Reserved.
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

"""vMF multiple-instance learning for few-shot co-localization."""

from vmfmil._core import (
    BackgroundModel,
    CapacityError,
    DataError,
    DegenerateResultant,
    DimensionMismatch,
    DomainError,
    Error,
    NumericalError,
    ProposalSet,
    ProtocolError,
    ValidationError,
    __version__,
    bessel_ratio,
    estimate_kappa,
    fit_vmf,
    iou,
    log_bessel_i,
    log_normalizer,
    nms,
    read_proposals,
    run_col,
    sample_vmf,
    score_query,
    synthetic_world,
    vmf_log_density,
    write_proposals,
)

__all__ = [
    "BackgroundModel",
    "CapacityError",
    "DataError",
    "DegenerateResultant",
    "DimensionMismatch",
    "DomainError",
    "Error",
    "NumericalError",
    "ProposalSet",
    "ProtocolError",
    "ValidationError",
    "__version__",
    "bessel_ratio",
    "estimate_kappa",
    "fit_vmf",
    "iou",
    "log_bessel_i",
    "log_normalizer",
    "nms",
    "read_proposals",
    "run_col",
    "sample_vmf",
    "score_query",
    "synthetic_world",
    "vmf_log_density",
    "write_proposals",
]
