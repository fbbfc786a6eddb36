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
"""Geometric answers to situated questions.

Object centers are expressed in the agent's frame (realign_frame): +y is
straight ahead and x < 0 is on the agent's left. Bearings are measured in
degrees from straight ahead, positive to the left. Answers whose geometry is
within the angle or distance margins of flipping raise AmbiguousEpisodeError.
"""
import collections

import numpy as np

from geometry import frames

FAMILIES = ('side', 'direction', 'counting', 'nearest', 'attribute',
            'visibility')
SIDES = ('left', 'right')
DIRECTIONS = ('front', 'behind', 'left', 'right')

ANGLE_MARGIN_DEG = 10.0
DISTANCE_MARGIN = 0.1

# A question about a scene. Unused fields are None.
Query = collections.namedtuple('Query',
                               ['family', 'object_id', 'side', 'direction',
                                'category'])


class AmbiguousEpisodeError(Exception):
    """Raised when a question's answer is within the margins of changing."""


class AgentView:
    """Object centers of a scene seen from a situation."""

    def __init__(self, scene, situation):
        self.objects = scene.objects
        centers = np.array([obj.center for obj in scene.objects],
                           dtype=np.float64).reshape(-1, 3)
        self.local = frames.realign_frame(centers, situation)
        self.distances = np.hypot(self.local[:, 0], self.local[:, 1])
        self.bearings = np.degrees(
            np.arctan2(-self.local[:, 0], self.local[:, 1]))

    def in_direction(self, index, direction):
        """Whether the object lies in the |direction| half-plane: front is
        y > 0, behind y < 0, left x < 0 and right x > 0. None when it is
        within the margins of the dividing line."""
        x, y = self.local[index, 0], self.local[index, 1]
        bearing = abs(self.bearings[index])
        if direction in ('front', 'behind'):
            if abs(y) < DISTANCE_MARGIN or abs(bearing - 90) < ANGLE_MARGIN_DEG:
                return None
            return (y > 0) == (direction == 'front')
        if abs(x) < DISTANCE_MARGIN or min(bearing,
                                           180 - bearing) < ANGLE_MARGIN_DEG:
            return None
        return (x < 0) == (direction == 'left')

    def side(self, index):
        """'left' or 'right', checked against the margins."""
        on_left = self.in_direction(index, 'left')
        if on_left is None:
            raise AmbiguousEpisodeError('Object %d is almost straight ahead '
                                        'or behind.' % index)
        return 'left' if on_left else 'right'

    def in_front(self, index):
        """Whether the object is in the front half-plane, checked against the
        margins."""
        ahead = self.in_direction(index, 'front')
        if ahead is None:
            raise AmbiguousEpisodeError('Object %d is almost level with the '
                                        'agent.' % index)
        return ahead

    def by_distance(self, indices):
        """|indices| sorted from nearest to farthest."""
        return sorted(indices, key=lambda index: (self.distances[index], index))


def _check_nearest_is_clear(view, ordered):
    if len(ordered) > 1:
        first, second = ordered[0], ordered[1]
        if (view.distances[second] - view.distances[first] < DISTANCE_MARGIN
                and view.objects[first].category !=
                view.objects[second].category):
            raise AmbiguousEpisodeError('Two objects are almost equally near.')


def _answer_direction(view, direction):
    """The nearest object in the |direction| half-plane."""
    indices = range(len(view.objects))
    status = [view.in_direction(index, direction) for index in indices]
    members = [index for index in indices if status[index]]
    if not members:
        raise AmbiguousEpisodeError('Nothing is %s.' % direction)
    ordered = view.by_distance(members)
    answer = ordered[0]
    _check_nearest_is_clear(view, ordered)
    limit = view.distances[answer] + DISTANCE_MARGIN
    for index in indices:
        if (status[index] is None and view.distances[index] <= limit and
                view.objects[index].category != view.objects[answer].category):
            raise AmbiguousEpisodeError('An object as near as the answer is '
                                        'on the dividing line.')
    return view.objects[answer].category


def _answer_attribute(view, category, side):
    instances = [
        index for index, obj in enumerate(view.objects)
        if obj.category == category
    ]
    on_side = [index for index in instances if view.side(index) == side]
    if len(on_side) != 1:
        raise AmbiguousEpisodeError('Expected one %s on the %s, found %d.' %
                                    (category, side, len(on_side)))
    return view.objects[on_side[0]].color


def _index_of(scene, object_id):
    for index, obj in enumerate(scene.objects):
        if obj.object_id == object_id:
            return index
    raise ValueError('No object %s in scene %s.' % (object_id, scene.scene_id))


def answer_query(scene, situation, query):
    """Returns the answer string of |query| asked at |situation|."""
    view = AgentView(scene, situation)
    family = query.family
    if family == 'side':
        index = _index_of(scene, query.object_id)
        return 'yes' if view.side(index) == query.side else 'no'
    if family == 'direction':
        return _answer_direction(view, query.direction)
    if family == 'counting':
        return str(
            sum(1 for obj in scene.objects if obj.category == query.category))
    if family == 'nearest':
        if not len(scene.objects):
            raise AmbiguousEpisodeError('Scene has no objects.')
        ordered = view.by_distance(range(len(scene.objects)))
        _check_nearest_is_clear(view, ordered)
        return scene.objects[ordered[0]].category
    if family == 'attribute':
        return _answer_attribute(view, query.category, query.side)
    if family == 'visibility':
        index = _index_of(scene, query.object_id)
        return 'yes' if view.in_front(index) else 'no'
    raise ValueError('Unknown question family: %s.' % family)
