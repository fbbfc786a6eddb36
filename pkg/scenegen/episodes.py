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
"""Situated question answering episodes over generated scenes."""
import collections
import math

import numpy as np

from common import logs
from common import utils
from geometry import frames
from scenegen import oracle
from scenegen import scenes

BESIDE_DISTANCE = 0.5
COUNTING_PRESENT_PROBABILITY = 0.8
MAX_ATTEMPTS_PER_EPISODE = 50

QUESTION_TYPES = ('What', 'Is', 'How', 'Can', 'Which', 'Other')

SITUATION_TEMPLATE = 'I am standing beside the {first} facing the {second}.'
QUESTION_TEMPLATES = {
    'side': 'Is the {reference} on my {side}?',
    'counting': 'How many {plural} are in the room?',
    'nearest': 'What is the object closest to me?',
    'attribute': 'What color is the {category} on my {side}?',
    'visibility': 'Can I see the {reference} without turning around?',
}
DIRECTION_QUESTIONS = {
    'front': 'Which object is in front of me?',
    'behind': 'Which object is behind me?',
    'left': 'Which object is on my left?',
    'right': 'Which object is on my right?',
}

logger = logs.Logger('episodes')

Episode = collections.namedtuple('Episode', [
    'episode_id',
    'scene_id',
    'situation_text',
    'question',
    'answer',
    'situation',
    'question_type',
    'family',
])


def question_type(question):
    """The breakdown type of |question|: its first word when that is one of
    QUESTION_TYPES, else 'Other'."""
    words = question.split()
    first = words[0].strip('?,.!').capitalize() if words else ''
    return first if first in QUESTION_TYPES[:-1] else 'Other'


def reference(scene, obj):
    """How to name |obj| unambiguously: its category, its color and category,
    or None when neither is unique."""
    same_category = [
        other for other in scene.objects if other.category == obj.category
    ]
    if len(same_category) == 1:
        return obj.category
    same_color = [other for other in same_category if other.color == obj.color]
    if len(same_color) == 1:
        return '%s %s' % (obj.color, obj.category)
    return None


def beside_situation(scene, first, second, wall_gap=0.1):
    """The agent standing BESIDE_DISTANCE beyond |first|'s footprint on the
    way to |second|, facing |second|'s center."""
    offset = np.array(second.center[:2]) - np.array(first.center[:2])
    distance = float(np.hypot(offset[0], offset[1]))
    if distance < 1e-9:
        raise oracle.AmbiguousEpisodeError('Objects share a center.')
    unit = offset / distance
    half = np.array(first.size[:2]) / 2
    exits = [half[axis] / abs(unit[axis]) for axis in (0, 1) if unit[axis]]
    along = min(exits) + BESIDE_DISTANCE
    if along >= distance - oracle.DISTANCE_MARGIN:
        raise oracle.AmbiguousEpisodeError('Objects are too close together.')

    position = np.array([
        first.center[0] + along * unit[0], first.center[1] + along * unit[1],
        0.0
    ])
    if not scene.contains(position, wall_gap):
        raise oracle.AmbiguousEpisodeError('Standing point is outside the '
                                           'room.')
    point = (position[0], position[1], position[0], position[1])
    if any(
            scenes.footprints_overlap(point, obj.footprint)
            for obj in scene.objects):
        raise oracle.AmbiguousEpisodeError('Standing point is inside an '
                                           'object.')
    return frames.SituationVector.from_yaw(position,
                                           math.atan2(-unit[0], unit[1]))


def _random_query(scene, family, referable, rng):
    if family in ('side', 'visibility'):
        target = referable[rng.integers(len(referable))]
        side = oracle.SIDES[rng.integers(2)] if family == 'side' else None
        return oracle.Query(family, target.object_id, side, None, None)
    if family == 'direction':
        return oracle.Query(family, None, None,
                            oracle.DIRECTIONS[rng.integers(4)], None)
    if family == 'counting':
        present = sorted({obj.category for obj in scene.objects})
        if rng.random() < COUNTING_PRESENT_PROBABILITY:
            category = present[rng.integers(len(present))]
        else:
            category = scenes.CATEGORIES[rng.integers(len(scenes.CATEGORIES))]
        return oracle.Query(family, None, None, None, category)
    if family == 'nearest':
        return oracle.Query(family, None, None, None, None)
    if family == 'attribute':
        present = sorted({obj.category for obj in scene.objects})
        return oracle.Query(family, None, oracle.SIDES[rng.integers(2)], None,
                            present[rng.integers(len(present))])
    raise ValueError('Unknown question family: %s.' % family)


def question_text(scene, query):
    """Renders |query| as a question."""
    if query.family == 'direction':
        return DIRECTION_QUESTIONS[query.direction]
    target_reference = None
    if query.object_id is not None:
        target = next(
            obj for obj in scene.objects if obj.object_id == query.object_id)
        target_reference = reference(scene, target)
    return QUESTION_TEMPLATES[query.family].format(
        reference=target_reference,
        side=query.side,
        plural=scenes.PLURALS.get(query.category),
        category=query.category)


def generate_episode(scene, episode_id, seed, families=oracle.FAMILIES):
    """Generates one episode of |scene|. Raises AmbiguousEpisodeError when the
    random draw gives an ambiguous situation or answer."""
    rng = np.random.default_rng(seed)
    referable = [obj for obj in scene.objects if reference(scene, obj)]
    if len(referable) < 2:
        raise oracle.AmbiguousEpisodeError(
            'Scene %s has fewer than two nameable objects.' % scene.scene_id)
    order = rng.permutation(len(referable))
    first, second = referable[order[0]], referable[order[1]]
    situation = beside_situation(scene, first, second)

    family = families[rng.integers(len(families))]
    query = _random_query(scene, family, referable, rng)
    answer = oracle.answer_query(scene, situation, query)
    situation_text = SITUATION_TEMPLATE.format(first=reference(scene, first),
                                               second=reference(scene, second))
    question = question_text(scene, query)
    return Episode(episode_id, scene.scene_id, situation_text, question,
                   answer, situation, question_type(question), family)


def generate_episodes(scene, count, seed, families=oracle.FAMILIES):
    """Generates up to |count| episodes, redrawing ambiguous ones. Episode
    seeds derive from (seed, scene id, index, attempt)."""
    episodes = []
    for index in range(count):
        episode_id = '%s_%04d' % (scene.scene_id, index)
        for attempt in range(MAX_ATTEMPTS_PER_EPISODE):
            episode_seed = utils.derive_seed(seed, scene.scene_id, index,
                                             attempt)
            try:
                episodes.append(
                    generate_episode(scene, episode_id, episode_seed,
                                     families))
                break
            except oracle.AmbiguousEpisodeError:
                continue
        else:
            logger.warning('Gave up on episode %s after %d attempts.',
                           episode_id, MAX_ATTEMPTS_PER_EPISODE)
    return episodes
