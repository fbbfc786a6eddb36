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
"""Procedural rooms of household objects and their point clouds.

A room is the rectangle [0, width] x [0, depth] with the floor at z = 0.
Objects are boxes standing on the floor whose yaw is a multiple of 90
degrees, so every footprint is an axis-aligned rectangle.
"""
import collections
import math

import numpy as np

from common import logs
from tokenization import voxelize

CATEGORIES = (
    'chair',
    'table',
    'sofa',
    'bed',
    'cabinet',
    'desk',
    'bookshelf',
    'lamp',
    'tv',
    'plant',
    'trash can',
    'refrigerator',
)

PLURALS = {
    'chair': 'chairs',
    'table': 'tables',
    'sofa': 'sofas',
    'bed': 'beds',
    'cabinet': 'cabinets',
    'desk': 'desks',
    'bookshelf': 'bookshelves',
    'lamp': 'lamps',
    'tv': 'tvs',
    'plant': 'plants',
    'trash can': 'trash cans',
    'refrigerator': 'refrigerators',
}

# Width (x), depth (y) and height in meters before jitter.
CATEGORY_SIZES = {
    'chair': (0.5, 0.5, 0.9),
    'table': (1.2, 0.8, 0.75),
    'sofa': (1.8, 0.9, 0.8),
    'bed': (2.0, 1.5, 0.6),
    'cabinet': (0.8, 0.5, 1.2),
    'desk': (1.2, 0.6, 0.75),
    'bookshelf': (0.9, 0.35, 1.8),
    'lamp': (0.3, 0.3, 1.5),
    'tv': (1.0, 0.2, 0.6),
    'plant': (0.4, 0.4, 1.0),
    'trash can': (0.35, 0.35, 0.5),
    'refrigerator': (0.8, 0.7, 1.8),
}

COLORS = collections.OrderedDict([
    ('red', (0.85, 0.12, 0.12)),
    ('green', (0.15, 0.65, 0.2)),
    ('blue', (0.15, 0.3, 0.85)),
    ('yellow', (0.95, 0.85, 0.15)),
    ('white', (0.97, 0.97, 0.97)),
    ('black', (0.05, 0.05, 0.05)),
    ('brown', (0.45, 0.28, 0.12)),
    ('gray', (0.5, 0.5, 0.5)),
])

FLOOR_COLOR = (0.62, 0.58, 0.52)
WALL_COLOR = (0.88, 0.86, 0.8)
COLOR_NOISE = 0.03
SIZE_JITTER = 0.15

SceneConfig = collections.namedtuple('SceneConfig', [
    'room_min',
    'room_max',
    'room_height',
    'min_objects',
    'max_objects',
    'object_gap',
    'wall_gap',
    'max_attempts',
])

DEFAULT_SCENE_CONFIG = SceneConfig(room_min=3.5,
                                   room_max=6.0,
                                   room_height=2.5,
                                   min_objects=4,
                                   max_objects=8,
                                   object_gap=0.3,
                                   wall_gap=0.1,
                                   max_attempts=200)

DEFAULT_POINT_DENSITY = 400.0

logger = logs.Logger('scenes')


class PlacementFailureError(Exception):
    """Raised when objects cannot be placed without overlap."""


class SceneObject(
        collections.namedtuple(
            'SceneObject',
            ['object_id', 'category', 'color', 'center', 'size', 'yaw'])):
    """A box on the floor. |center| is the box center, |size| its axis-aligned
    (x, y, z) extent after applying |yaw|."""

    __slots__ = ()

    @property
    def footprint(self):
        """(x_min, y_min, x_max, y_max) on the floor."""
        return (self.center[0] - self.size[0] / 2,
                self.center[1] - self.size[1] / 2,
                self.center[0] + self.size[0] / 2,
                self.center[1] + self.size[1] / 2)

    @property
    def category_id(self):
        """Index of the category in CATEGORIES."""
        return CATEGORIES.index(self.category)

    def to_dict(self):
        """Returns a json-friendly description."""
        return collections.OrderedDict([
            ('object_id', self.object_id),
            ('category', self.category),
            ('color', self.color),
            ('center', [float(value) for value in self.center]),
            ('size', [float(value) for value in self.size]),
            ('yaw', float(self.yaw)),
        ])

    @classmethod
    def from_dict(cls, data):
        """Inverse of to_dict."""
        return cls(int(data['object_id']), data['category'], data['color'],
                   tuple(data['center']), tuple(data['size']),
                   float(data['yaw']))


class Scene(
        collections.namedtuple('Scene',
                               ['scene_id', 'width', 'depth', 'height',
                                'objects'])):
    """A rectangular room and the objects in it."""

    __slots__ = ()

    @property
    def bounds(self):
        """Room bounds as a 2 x 3 array."""
        return np.array([[0.0, 0.0, 0.0], [self.width, self.depth,
                                           self.height]])

    def contains(self, point, margin=0.0):
        """Whether |point| is inside the room on the floor plane, at least
        |margin| away from the walls."""
        return (margin <= point[0] <= self.width - margin and
                margin <= point[1] <= self.depth - margin)

    def to_dict(self):
        """Returns a json-friendly description."""
        return collections.OrderedDict([
            ('scene_id', self.scene_id),
            ('width', float(self.width)),
            ('depth', float(self.depth)),
            ('height', float(self.height)),
            ('objects', [obj.to_dict() for obj in self.objects]),
        ])

    @classmethod
    def from_dict(cls, data):
        """Inverse of to_dict."""
        return cls(data['scene_id'], float(data['width']),
                   float(data['depth']), float(data['height']),
                   tuple(SceneObject.from_dict(obj) for obj in data['objects']))


def footprints_overlap(first, second, gap=0.0):
    """Whether two (x_min, y_min, x_max, y_max) rectangles come closer than
    |gap|."""
    return not (first[2] + gap <= second[0] or second[2] + gap <= first[0] or
                first[3] + gap <= second[1] or second[3] + gap <= first[1])


def _place_object(object_id, width, depth, placed, config, rng):
    category = CATEGORIES[rng.integers(len(CATEGORIES))]
    color = list(COLORS)[rng.integers(len(COLORS))]
    base = np.array(CATEGORY_SIZES[category])
    size = base * rng.uniform(1 - SIZE_JITTER, 1 + SIZE_JITTER, size=3)
    quarter_turns = int(rng.integers(4))
    if quarter_turns % 2:
        size[[0, 1]] = size[[1, 0]]
    yaw = quarter_turns * math.pi / 2
    low = config.wall_gap + size[:2] / 2
    high = np.array([width, depth]) - low
    if np.any(high <= low):
        return None

    for _ in range(config.max_attempts):
        center_xy = rng.uniform(low, high)
        candidate = SceneObject(object_id, category, color,
                                (float(center_xy[0]), float(center_xy[1]),
                                 float(size[2] / 2)), tuple(
                                     float(value) for value in size), yaw)
        if not any(
                footprints_overlap(candidate.footprint, other.footprint,
                                   config.object_gap) for other in placed):
            return candidate
    return None


def generate_scene(scene_id, seed, config=DEFAULT_SCENE_CONFIG):
    """Generates a room with a random number of non-overlapping objects.
    Deterministic per |seed|."""
    if not 0 < config.room_min <= config.room_max:
        raise ValueError('Invalid room size range.')
    if not 1 <= config.min_objects <= config.max_objects:
        raise ValueError('Invalid object count range.')
    rng = np.random.default_rng(seed)
    width, depth = (float(value) for value in rng.uniform(
        config.room_min, config.room_max, size=2))
    num_objects = int(
        rng.integers(config.min_objects, config.max_objects, endpoint=True))

    objects = []
    for object_id in range(num_objects):
        placed = _place_object(object_id, width, depth, objects, config, rng)
        if placed is None:
            raise PlacementFailureError(
                'Could not place object %d of %d in a %.2f x %.2f room.' %
                (object_id + 1, num_objects, width, depth))
        objects.append(placed)
    return Scene(scene_id, width, depth, config.room_height, tuple(objects))


def _sample_rectangle(rng, count, origin, first_axis, second_axis):
    """Uniform points on the parallelogram origin + u*first + v*second."""
    u = rng.random((count, 1))
    v = rng.random((count, 1))
    return np.asarray(origin) + u * np.asarray(first_axis) + v * np.asarray(
        second_axis)


def _box_faces(obj):
    """(origin, first axis, second axis) of the top and four side faces."""
    x0, y0, x1, y1 = obj.footprint
    height = obj.size[2]
    dx, dy = x1 - x0, y1 - y0
    return [
        ((x0, y0, height), (dx, 0, 0), (0, dy, 0)),
        ((x0, y0, 0), (dx, 0, 0), (0, 0, height)),
        ((x0, y1, 0), (dx, 0, 0), (0, 0, height)),
        ((x0, y0, 0), (0, dy, 0), (0, 0, height)),
        ((x1, y0, 0), (0, dy, 0), (0, 0, height)),
    ]


def _face_points(rng, density, face):
    origin, first, second = face
    area = np.linalg.norm(np.cross(first, second))
    count = max(int(round(density * area)), 1)
    return _sample_rectangle(rng, count, origin, first, second)


def sample_point_cloud(scene, density=DEFAULT_POINT_DENSITY, seed=0):
    """Samples the floor, the four walls and every object surface with
    |density| points per square meter. Floor and wall points are
    unlabeled."""
    if density <= 0:
        raise ValueError('Point density must be positive.')
    rng = np.random.default_rng(seed)
    width, depth, height = scene.width, scene.depth, scene.height
    surfaces = [
        ((0, 0, 0), (width, 0, 0), (0, depth, 0)),
        ((0, 0, 0), (width, 0, 0), (0, 0, height)),
        ((0, depth, 0), (width, 0, 0), (0, 0, height)),
        ((0, 0, 0), (0, depth, 0), (0, 0, height)),
        ((width, 0, 0), (0, depth, 0), (0, 0, height)),
    ]
    points = []
    colors = []
    categories = []
    for index, surface in enumerate(surfaces):
        surface_points = _face_points(rng, density, surface)
        points.append(surface_points)
        colors.append(
            np.tile(FLOOR_COLOR if index == 0 else WALL_COLOR,
                    (len(surface_points), 1)))
        categories.append(-np.ones(len(surface_points), dtype=np.int64))

    for obj in scene.objects:
        for face in _box_faces(obj):
            face_points = _face_points(rng, density, face)
            points.append(face_points)
            noise = rng.normal(0.0, COLOR_NOISE, size=face_points.shape)
            colors.append(np.clip(np.array(COLORS[obj.color]) + noise, 0, 1))
            categories.append(
                np.full(len(face_points), obj.category_id, dtype=np.int64))

    cloud = voxelize.PointCloud(np.concatenate(points),
                                np.concatenate(colors),
                                np.concatenate(categories))
    logger.debug('Sampled %d points for scene %s.', len(cloud), scene.scene_id)
    return cloud
