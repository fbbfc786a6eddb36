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
"""Rotation representations and conversions.

Rotations are stored as 3x3 matrices. The 6D vector (first two columns of the
matrix), the unit quaternion (w, x, y, z) and the (sin, cos) pair of the yaw
angle are views that can be converted to and from matrices.

Yaw is the counterclockwise angle about +z between +y and the heading
R·(0, 1, 0), so the identity faces +y and has yaw 0.
"""
import math

import numpy as np

ORTHONORMAL_TOLERANCE = 1e-6
DEGENERATE_TOLERANCE = 1e-9

# Output width of each rotation representation, used to size model heads.
ROTATION_CHANNELS = {
    '6d': 6,
    'quaternion': 4,
    'sincos': 2,
}

_UP = np.array([0.0, 0.0, 1.0])
_FORWARD = np.array([0.0, 1.0, 0.0])


class DegenerateInputError(ValueError):
    """Raised when a rotation parameterization cannot be decoded."""


class NotARotationError(ValueError):
    """Raised when a matrix is not a proper rotation."""


class VerticalHeadingError(ValueError):
    """Raised when a heading has no horizontal component."""


def rotz(theta):
    """Returns the rotation matrix of |theta| radians about +z."""
    cos, sin = math.cos(theta), math.sin(theta)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(matrix, tolerance=ORTHONORMAL_TOLERANCE):
    """Returns True if |matrix| is orthonormal with determinant +1."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
        return False
    if np.max(np.abs(matrix.T @ matrix - np.eye(3))) >= tolerance:
        return False
    return abs(np.linalg.det(matrix) - 1.0) < tolerance


def check_rotation(matrix):
    """Returns |matrix| as a float64 array or raises NotARotationError."""
    if not is_rotation(matrix):
        raise NotARotationError('Not a rotation matrix: %s.' %
                                np.array2string(np.asarray(matrix)))
    return np.asarray(matrix, dtype=np.float64)


def rot6d_to_matrix(vector):
    """Decodes a 6D rotation vector with Gram-Schmidt. The first three entries
    become the first column; the second three, made orthogonal to the first,
    become the second column; the third column is their cross product."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (6,) or not np.all(np.isfinite(vector)):
        raise DegenerateInputError('6D vector must have 6 finite entries.')
    first, second = vector[:3], vector[3:]
    first_norm = np.linalg.norm(first)
    if first_norm <= DEGENERATE_TOLERANCE:
        raise DegenerateInputError('First column of 6D vector is zero.')
    col1 = first / first_norm
    second = second - np.dot(col1, second) * col1
    second_norm = np.linalg.norm(second)
    if second_norm <= DEGENERATE_TOLERANCE:
        raise DegenerateInputError('6D vector columns are parallel.')
    col2 = second / second_norm
    col3 = np.cross(col1, col2)
    return np.stack([col1, col2, col3], axis=1)


def matrix_to_rot6d(matrix):
    """Returns the first two columns of |matrix| stacked into a 6-vector."""
    matrix = check_rotation(matrix)
    return np.concatenate([matrix[:, 0], matrix[:, 1]])


def quaternion_to_matrix(quaternion):
    """Converts a (w, x, y, z) quaternion to a rotation matrix. The quaternion
    is normalized first."""
    quaternion = np.asarray(quaternion, dtype=np.float64)
    norm = np.linalg.norm(quaternion)
    if quaternion.shape != (4,) or not np.isfinite(norm) or (
            norm <= DEGENERATE_TOLERANCE):
        raise DegenerateInputError('Quaternion must be a finite nonzero '
                                   '4-vector.')
    w, x, y, z = quaternion / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quaternion(matrix):
    """Converts a rotation matrix to a unit (w, x, y, z) quaternion with w >= 0.
    """
    matrix = check_rotation(matrix)
    trace = np.trace(matrix)
    # Pivot on the largest diagonal term for numerical stability.
    if trace > 0:
        scale = math.sqrt(trace + 1.0) * 2
        quaternion = np.array([
            0.25 * scale,
            (matrix[2, 1] - matrix[1, 2]) / scale,
            (matrix[0, 2] - matrix[2, 0]) / scale,
            (matrix[1, 0] - matrix[0, 1]) / scale,
        ])
    elif matrix[0, 0] > matrix[1, 1] and matrix[0, 0] > matrix[2, 2]:
        scale = math.sqrt(1.0 + matrix[0, 0] - matrix[1, 1] - matrix[2, 2]) * 2
        quaternion = np.array([
            (matrix[2, 1] - matrix[1, 2]) / scale,
            0.25 * scale,
            (matrix[0, 1] + matrix[1, 0]) / scale,
            (matrix[0, 2] + matrix[2, 0]) / scale,
        ])
    elif matrix[1, 1] > matrix[2, 2]:
        scale = math.sqrt(1.0 + matrix[1, 1] - matrix[0, 0] - matrix[2, 2]) * 2
        quaternion = np.array([
            (matrix[0, 2] - matrix[2, 0]) / scale,
            (matrix[0, 1] + matrix[1, 0]) / scale,
            0.25 * scale,
            (matrix[1, 2] + matrix[2, 1]) / scale,
        ])
    else:
        scale = math.sqrt(1.0 + matrix[2, 2] - matrix[0, 0] - matrix[1, 1]) * 2
        quaternion = np.array([
            (matrix[1, 0] - matrix[0, 1]) / scale,
            (matrix[0, 2] + matrix[2, 0]) / scale,
            (matrix[1, 2] + matrix[2, 1]) / scale,
            0.25 * scale,
        ])
    quaternion /= np.linalg.norm(quaternion)
    if quaternion[0] < 0:
        quaternion = -quaternion
    return quaternion


def yaw_of(matrix):
    """Returns the yaw of |matrix| in (-pi, pi]: the angle from +y to the
    horizontal part of the heading R·(0, 1, 0)."""
    heading = np.asarray(matrix, dtype=np.float64) @ _FORWARD
    if math.hypot(heading[0], heading[1]) < DEGENERATE_TOLERANCE:
        raise VerticalHeadingError('Heading %s is vertical.' %
                                   np.array2string(heading))
    yaw = math.atan2(-heading[0], heading[1])
    if yaw == -math.pi:
        yaw = math.pi
    return yaw


def rotation_from_yaw(yaw):
    """Returns the rotation whose heading has yaw |yaw|."""
    return rotz(yaw)


def wrap_angle(angle):
    """Wraps |angle| radians into (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped == -math.pi:
        wrapped = math.pi
    return wrapped


def angular_error_deg(first, second):
    """Returns the absolute wrapped difference between two angles (radians) in
    degrees, within [0, 180]."""
    return abs(math.degrees(wrap_angle(first - second)))


def encode_rotation(matrix, representation='6d'):
    """Encodes |matrix| in |representation| ('6d', 'quaternion' or
    'sincos')."""
    if representation == '6d':
        return matrix_to_rot6d(matrix)
    if representation == 'quaternion':
        return matrix_to_quaternion(matrix)
    if representation == 'sincos':
        yaw = yaw_of(check_rotation(matrix))
        return np.array([math.sin(yaw), math.cos(yaw)])
    raise ValueError('Unknown rotation representation: %s.' % representation)


def decode_rotation(vector, representation='6d'):
    """Decodes a |representation| vector into a rotation matrix."""
    vector = np.asarray(vector, dtype=np.float64)
    if representation == '6d':
        return rot6d_to_matrix(vector)
    if representation == 'quaternion':
        return quaternion_to_matrix(vector)
    if representation == 'sincos':
        if vector.shape != (2,) or not np.all(np.isfinite(vector)) or (
                np.linalg.norm(vector) <= DEGENERATE_TOLERANCE):
            raise DegenerateInputError('(sin, cos) pair must be a finite '
                                       'nonzero 2-vector.')
        return rotz(math.atan2(vector[0], vector[1]))
    raise ValueError('Unknown rotation representation: %s.' % representation)
