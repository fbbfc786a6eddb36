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
"""Reading and writing episode annotation files.

A file is either JSON Lines (one record per line) or a JSON array of records.
Each record has:

  scene_id   string
  situation  string
  question   string
  answers    non-empty list of strings (the first one is used)
  position   {"x": number, "y": number, "z": number}
  rotation   {"w", "x", "y", "z"} quaternion or {"yaw": radians}

and optionally episode_id, question_type and family. Quaternions are
(w, x, y, z) rotations of the agent frame whose +y axis is the heading; any
pitch or roll is dropped. Words missing from the model vocabulary are encoded
as <unk> when the episodes are turned into model inputs.
"""
import collections
import json
import math
import numbers

from common import filesystem
from geometry import frames
from geometry import rotations
from scenegen import episodes as episodes_lib

REQUIRED_FIELDS = ('scene_id', 'situation', 'question', 'answers', 'position',
                   'rotation')


class SchemaError(ValueError):
    """Raised when an annotation record does not follow the schema."""

    def __init__(self, location, field, message):
        super().__init__('%s: field "%s": %s' % (location, field, message))
        self.location = location
        self.field = field


def _number(record, field, key, location):
    value = record[field].get(key)
    if (not isinstance(value, numbers.Real) or isinstance(value, bool) or
            not math.isfinite(value)):
        raise SchemaError(location, '%s.%s' % (field, key),
                          'expected a finite number, got %r.' % (value,))
    return float(value)


def _string(record, field, location):
    value = record[field]
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(location, field, 'expected a non-empty string.')
    return value


def _situation(record, location):
    for field in ('position', 'rotation'):
        if not isinstance(record[field], dict):
            raise SchemaError(location, field, 'expected an object.')
    position = [
        _number(record, 'position', key, location) for key in ('x', 'y', 'z')
    ]
    rotation = record['rotation']
    try:
        if 'yaw' in rotation:
            return frames.SituationVector.from_yaw(
                position, _number(record, 'rotation', 'yaw', location))
        quaternion = [
            _number(record, 'rotation', key, location)
            for key in ('w', 'x', 'y', 'z')
        ]
        return frames.SituationVector.from_matrix(
            position, rotations.quaternion_to_matrix(quaternion))
    except (rotations.DegenerateInputError,
            rotations.VerticalHeadingError) as error:
        raise SchemaError(location, 'rotation', str(error))


def parse_record(record, location, index):
    """Converts one decoded record into an Episode."""
    if not isinstance(record, dict):
        raise SchemaError(location, '<record>', 'expected an object.')
    for field in REQUIRED_FIELDS:
        if field not in record:
            raise SchemaError(location, field, 'missing.')
    scene_id = _string(record, 'scene_id', location)
    situation_text = _string(record, 'situation', location)
    question = _string(record, 'question', location)
    answers = record['answers']
    if (not isinstance(answers, list) or not answers or
            not all(isinstance(answer, str) for answer in answers)):
        raise SchemaError(location, 'answers',
                          'expected a non-empty list of strings.')
    episode_id = str(record.get('episode_id', '%s_%04d' % (scene_id, index)))
    return episodes_lib.Episode(
        episode_id, scene_id, situation_text, question, answers[0],
        _situation(record, location),
        record.get('question_type', episodes_lib.question_type(question)),
        record.get('family'))


def parse_annotations(text):
    """Parses annotation |text| into Episodes."""
    if text.lstrip().startswith('['):
        try:
            records = json.loads(text)
        except ValueError as error:
            raise SchemaError('array', '<json>', str(error))
        return [
            parse_record(record, 'record %d' % (index + 1), index)
            for index, record in enumerate(records)
        ]

    episodes = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        location = 'line %d' % line_number
        try:
            record = json.loads(line)
        except ValueError as error:
            raise SchemaError(location, '<json>', str(error))
        episodes.append(parse_record(record, location, len(episodes)))
    return episodes


def load_annotations(path):
    """Reads the episodes of the annotation file at |path|."""
    return parse_annotations(filesystem.read(path))


def episode_record(episode):
    """Returns the annotation record of |episode| with a fixed field
    order."""
    position = episode.situation.position
    return collections.OrderedDict([
        ('episode_id', episode.episode_id),
        ('scene_id', episode.scene_id),
        ('situation', episode.situation_text),
        ('question', episode.question),
        ('answers', [episode.answer]),
        ('position',
         collections.OrderedDict([('x', float(position[0])),
                                  ('y', float(position[1])),
                                  ('z', float(position[2]))])),
        ('rotation', {
            'yaw': float(episode.situation.yaw)
        }),
        ('question_type', episode.question_type),
        ('family', episode.family),
    ])


def write_annotations(path, episodes, as_array=False):
    """Atomically writes |episodes| as JSON Lines, or as one JSON array when
    |as_array| is set."""
    records = [episode_record(episode) for episode in episodes]
    if as_array:
        contents = json.dumps(records, indent=1) + '\n'
    else:
        contents = ''.join(json.dumps(record) + '\n' for record in records)
    filesystem.write_atomic(path, contents)
