# Copyright 2020 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Tests for frames.py."""
import math

import numpy as np
import pytest

from geometry import frames
from geometry import rotations


def test_situation_vector_invariants():
    """Tests that a situation keeps an orthonormal, ground-parallel
    rotation."""
    situation = frames.SituationVector.from_yaw([1.0, 2.0, 0.0], 0.7)
    assert rotations.is_rotation(situation.rotation)
    assert abs(situation.heading[2]) < 1e-6
    assert situation.euler == pytest.approx((0.7, 0.0, 0.0))


def test_situation_vector_is_immutable():
    """Tests that situation fields cannot be changed."""
    situation = frames.SituationVector.identity()
    with pytest.raises(AttributeError):
        situation.position = np.ones(3)
    with pytest.raises(ValueError):
        situation.position[0] = 1.0


def test_situation_vector_rejects_pitch():
    """Tests that a rotation tilting the z-axis is rejected."""
    pitch = np.array([[1.0, 0, 0], [0, math.cos(0.3), -math.sin(0.3)],
                      [0, math.sin(0.3), math.cos(0.3)]])
    with pytest.raises(rotations.NotARotationError):
        frames.SituationVector(np.zeros(3), pitch)


def test_from_matrix_projects_to_yaw():
    """Tests that from_matrix keeps only the horizontal heading."""
    tilted = rotations.rotz(0.5) @ np.array(
        [[1.0, 0, 0], [0, math.cos(0.2), -math.sin(0.2)],
         [0, math.sin(0.2), math.cos(0.2)]])
    situation = frames.SituationVector.from_matrix(np.zeros(3), tilted)
    assert situation.yaw == pytest.approx(0.5)


def test_realign_identity():
    """Tests that the identity situation leaves points unchanged."""
    points = np.random.default_rng(0).normal(size=(10, 3))
    assert np.allclose(
        frames.realign_frame(points, frames.SituationVector.identity()),
        points)


def test_realign_closed_form():
    """Tests the situation at (1, 0, 0) facing +x."""
    situation = frames.SituationVector.from_yaw([1.0, 0.0, 0.0], -math.pi / 2)
    assert np.allclose(situation.heading, [1, 0, 0])
    realigned = frames.realign_frame(np.array([[2.0, 0.0, 0.0]]), situation)
    assert np.allclose(realigned, [[0.0, 1.0, 0.0]])


def test_realign_maps_situation_to_origin_and_heading_to_y():
    """Tests that the situation position maps to the origin and a point ahead
    maps onto +y."""
    situation = frames.SituationVector.from_yaw([0.5, -1.5, 0.0], 2.1)
    points = np.stack(
        [situation.position, situation.position + 2 * situation.heading])
    realigned = frames.realign_frame(points, situation)
    assert np.allclose(realigned, [[0, 0, 0], [0, 2, 0]])


def test_realign_half_turn_negates_xy():
    """Tests that two situations differing by pi negate realigned x and y."""
    points = np.random.default_rng(1).normal(size=(8, 3))
    first = frames.realign_frame(
        points, frames.SituationVector.from_yaw(np.zeros(3), 0.3))
    second = frames.realign_frame(
        points, frames.SituationVector.from_yaw(np.zeros(3), 0.3 + math.pi))
    assert np.allclose(first[:, :2], -second[:, :2])
    assert np.allclose(first[:, 2], second[:, 2])


def test_realign_is_isometry():
    """Tests that pairwise distances are preserved."""
    rng = np.random.default_rng(2)
    points = rng.uniform(-5, 5, size=(30, 3))
    situation = frames.SituationVector.from_yaw(rng.uniform(-2, 2, size=3),
                                                1.3)
    realigned = frames.realign_frame(points, situation)
    before = np.linalg.norm(points[:, None] - points[None], axis=-1)
    after = np.linalg.norm(realigned[:, None] - realigned[None], axis=-1)
    assert np.max(np.abs(before - after)) < 1e-6


def test_realign_rigid_invariance():
    """Tests that a global yaw and translation applied to the scene and the
    situation leave realigned coordinates unchanged."""
    rng = np.random.default_rng(3)
    points = rng.uniform(-5, 5, size=(40, 3))
    situation = frames.SituationVector.from_yaw(
        [1.0, 2.0, 0.0], rng.uniform(-math.pi, math.pi))
    expected = frames.realign_frame(points, situation)
    for _ in range(50):
        yaw = rng.uniform(-math.pi, math.pi)
        translation = np.append(rng.uniform(-10, 10, size=2), 0.0)
        moved = frames.realign_frame(
            frames.rigid_transform(points, yaw, translation),
            frames.transform_situation(situation, yaw, translation))
        assert np.max(np.abs(moved - expected)) < 1e-6


def test_realign_composition():
    """Tests that realigning again with the identity situation changes
    nothing."""
    points = np.random.default_rng(4).normal(size=(5, 3))
    situation = frames.SituationVector.from_yaw([1, 1, 0], -0.4)
    once = frames.realign_frame(points, situation)
    assert np.allclose(
        frames.realign_frame(once, frames.SituationVector.identity()), once)


def test_realign_rejects_bad_shape():
    """Tests that non N x 3 input is rejected."""
    with pytest.raises(ValueError):
        frames.realign_frame(np.zeros((3, 2)),
                             frames.SituationVector.identity())
