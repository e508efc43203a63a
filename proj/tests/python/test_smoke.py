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

import math

import numpy as np
import pytest

import vmfmil


def test_normalizer_matches_sinh_form():
    for kappa in (0.1, 1.0, 10.0):
        closed = math.log(4 * math.pi * math.sinh(kappa) / kappa)
        assert vmfmil.log_normalizer(3, kappa) == pytest.approx(closed, rel=1e-12)


def test_exact_estimator_inverts_the_ratio():
    kappa = vmfmil.estimate_kappa(0.5, 64)
    assert vmfmil.bessel_ratio(64, kappa) == pytest.approx(0.5, abs=1e-10)
    assert vmfmil.estimate_kappa(0.1, 512, "order0") == pytest.approx(51.2)


def test_sampler_is_seeded_and_fit_recovers_direction():
    theta = np.zeros(8)
    theta[2] = 1.0
    a = vmfmil.sample_vmf(theta, 200.0, 500, seed=4)
    b = vmfmil.sample_vmf(theta, 200.0, 500, seed=4)
    assert a.shape == (500, 8)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    mean, kappa = vmfmil.fit_vmf(a)
    assert mean @ theta > 0.99
    assert 150.0 < kappa < 250.0


def test_col_recovers_planted_positive():
    rng = np.random.default_rng(0)
    d = 32
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    support, planted = [], []
    for i in range(5):
        feats = rng.normal(size=(20, d))
        feats /= np.linalg.norm(feats, axis=1, keepdims=True)
        row = 3 + 3 * i
        feats[row] = vmfmil.sample_vmf(direction, 200.0, 1, seed=i)[0]
        feats[0] = 0.5 * feats[row] + feats[1]
        feats[0] /= np.linalg.norm(feats[0])
        boxes = np.array([[2.0 * j, 0.0, 2.0 * j + 1.0, 1.0] for j in range(20)])
        support.append(vmfmil.ProposalSet(f"s{i}", boxes, feats))
        planted.append(row)
    result = vmfmil.run_col(support, kappa=10.0, kappa_rule="exact")
    assert result["top_index"] == planted
    assert result["theta"] @ direction > 0.9
    trace = result["loglik_trace"]
    assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))


def test_synthetic_world_round_trip(tmp_path):
    world = vmfmil.synthetic_world(images_per_class=3, seed=1)
    sets = world["proposals"]
    assert len(sets) == 30
    assert sets[0].features.shape == (20, 16)
    path = tmp_path / "p.bin"
    vmfmil.write_proposals(sets, path)
    back = vmfmil.read_proposals(path)
    assert [s.image_id for s in back] == [s.image_id for s in sets]
    np.testing.assert_array_equal(back[4].features, sets[4].features)
    np.testing.assert_array_equal(back[4].boxes, sets[4].boxes)


def test_boxes():
    assert vmfmil.iou([0, 0, 10, 10], [5, 5, 15, 15]) == pytest.approx(1 / 7)
    boxes = np.array([[0, 0, 8, 1], [2, 0, 10, 1], [4, 0, 12, 1]], dtype=float)
    assert vmfmil.nms(boxes, [0.9, 0.8, 0.7], 0.5) == [0, 2]


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(vmfmil.DomainError):
        vmfmil.estimate_kappa(0.5, 64, "order7")
    with pytest.raises(vmfmil.DataError):
        vmfmil.read_proposals(tmp_path / "missing.bin")
    with pytest.raises(vmfmil.Error):
        vmfmil.ProposalSet("x", np.zeros((2, 4)), np.ones((3, 4)))
