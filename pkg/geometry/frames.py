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
"""Situation vectors and situated coordinate frames."""
import math

import numpy as np

from geometry import rotations


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


class SituationVector:
    """An agent pose: a position in meters and a heading parallel to the ground
    plane. The rotation is stored as a matrix about the vertical axis only
    (zero pitch and roll)."""

    __slots__ = ('position', 'rotation')

    def __init__(self, position, rotation):
        position = np.asarray(position, dtype=np.float64)
        if position.shape != (3,) or not np.all(np.isfinite(position)):
            raise ValueError('Situation position must be a finite 3-vector.')
        rotation = rotations.check_rotation(rotation)
        if np.max(np.abs(rotation[:, 2] - np.array([0.0, 0.0, 1.0]))) >= (
                rotations.ORTHONORMAL_TOLERANCE):
            raise rotations.NotARotationError(
                'Situation rotation must keep the z-axis vertical.')
        object.__setattr__(self, 'position', _frozen(position))
        object.__setattr__(self, 'rotation', _frozen(rotation))

    def __setattr__(self, name, value):
        raise AttributeError('SituationVector is immutable.')

    def __repr__(self):
        return 'SituationVector(position=%s, yaw=%.6f)' % (list(
            self.position), self.yaw)

    @classmethod
    def from_yaw(cls, position, yaw):
        """Returns the situation at |position| with heading yaw |yaw|."""
        return cls(position, rotations.rotation_from_yaw(yaw))

    @classmethod
    def from_matrix(cls, position, matrix):
        """Returns the situation at |position| whose heading is the horizontal
        projection of |matrix|·(0, 1, 0). Any pitch or roll is dropped."""
        return cls.from_yaw(position, rotations.yaw_of(matrix))

    @classmethod
    def identity(cls):
        """Returns the situation at the origin facing +y."""
        return cls(np.zeros(3), np.eye(3))

    @property
    def yaw(self):
        """Heading angle in (-pi, pi]."""
        return rotations.yaw_of(self.rotation)

    @property
    def heading(self):
        """Unit forward direction."""
        return self.rotation @ np.array([0.0, 1.0, 0.0])

    @property
    def euler(self):
        """(theta, psi, phi) with theta the yaw and pitch/roll fixed to 0."""
        return (self.yaw, 0.0, 0.0)

    def to_rot6d(self):
        """Returns the 6D vector of the rotation."""
        return rotations.matrix_to_rot6d(self.rotation)

    def to_dict(self):
        """Returns a json-friendly description."""
        return {
            'position': [float(value) for value in self.position],
            'yaw': float(self.yaw),
        }


def realign_frame(points, situation):
    """Expresses |points| (N x 3) in the frame of |situation|: the origin moves
    to the situation position and the heading becomes +y, z stays vertical."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError('Points must be an N x 3 array.')
    realign = rotations.rotz(-rotations.yaw_of(situation.rotation))
    return (points - situation.position) @ realign.T


def rigid_transform(points, yaw, translation):
    """Rotates |points| by |yaw| about +z and then translates them."""
    points = np.asarray(points, dtype=np.float64)
    return points @ rotations.rotz(yaw).T + np.asarray(translation,
                                                       dtype=np.float64)


def transform_situation(situation, yaw, translation):
    """Applies the rigid transform of rigid_transform to |situation|."""
    position = rigid_transform(situation.position[None, :], yaw,
                               translation)[0]
    return SituationVector.from_yaw(position, situation.yaw + yaw)


def horizontal_distance(first, second):
    """Distance between two 3D points on the x-y plane."""
    return math.hypot(first[0] - second[0], first[1] - second[1])
