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
"""Saving and restoring parameter sets.

A checkpoint is a directory holding:

  manifest.txt  sitbench-checkpoint <version>
                dtype <float32|float64>
                tensors <count>
                <name> <comma separated shape> <offset> <count>, per tensor
  tensors.bin   every tensor flattened in manifest order, little-endian.
"""
import collections
import os

import numpy as np

from common import filesystem
from common import logs
from tinynn import tensor as tensor_lib

VERSION = 1
MANIFEST = 'manifest.txt'
TENSORS = 'tensors.bin'
_MAGIC = 'sitbench-checkpoint'
_LITTLE_ENDIAN = {
    'float32': '<f4',
    'float64': '<f8',
}

logger = logs.Logger('checkpoint')


class CheckpointError(ValueError):
    """Raised when a checkpoint is malformed or does not fit the model."""


def save_checkpoint(directory, parameter_set, dtype='float64'):
    """Writes |parameter_set| into |directory|."""
    if dtype not in _LITTLE_ENDIAN:
        raise ValueError('Unsupported checkpoint dtype: %s.' % dtype)
    filesystem.create_directory(directory)
    lines = [
        '%s %d' % (_MAGIC, VERSION),
        'dtype %s' % dtype,
        'tensors %d' % len(parameter_set),
    ]
    chunks = []
    offset = 0
    for name, tensor in parameter_set:
        shape = ','.join(str(size) for size in tensor.shape)
        lines.append('%s %s %d %d' % (name, shape or '-', offset,
                                      tensor.value.size))
        chunks.append(
            np.ascontiguousarray(tensor.value,
                                 dtype=_LITTLE_ENDIAN[dtype]).tobytes())
        offset += tensor.value.size
    filesystem.write_atomic(os.path.join(directory, TENSORS), b''.join(chunks),
                            'wb')
    filesystem.write_atomic(os.path.join(directory, MANIFEST),
                            '\n'.join(lines) + '\n')
    logger.info('Saved %d tensors to %s.', len(parameter_set), directory)


def _parse_manifest(text):
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 3:
        raise CheckpointError('Manifest is truncated.')
    magic, _, version = lines[0].partition(' ')
    if magic != _MAGIC or version != str(VERSION):
        raise CheckpointError('Unsupported checkpoint header: %s.' % lines[0])
    key, _, dtype = lines[1].partition(' ')
    if key != 'dtype' or dtype not in _LITTLE_ENDIAN:
        raise CheckpointError('Bad dtype line: %s.' % lines[1])
    key, _, count = lines[2].partition(' ')
    if key != 'tensors' or not count.isdigit() or int(count) != len(
            lines) - 3:
        raise CheckpointError('Bad tensor count line: %s.' % lines[2])

    entries = []
    for line in lines[3:]:
        parts = line.split()
        if len(parts) != 4:
            raise CheckpointError('Bad tensor line: %s.' % line)
        name, shape, offset, size = parts
        shape = () if shape == '-' else tuple(
            int(value) for value in shape.split(','))
        entries.append((name, shape, int(offset), int(size)))
    return dtype, entries


def load_checkpoint(directory):
    """Returns {name: float64 array} in manifest order."""
    manifest_path = os.path.join(directory, MANIFEST)
    if not os.path.exists(manifest_path):
        raise CheckpointError('No checkpoint manifest in %s.' % directory)
    dtype, entries = _parse_manifest(filesystem.read(manifest_path))
    with open(os.path.join(directory, TENSORS), 'rb') as handle:
        flat = np.frombuffer(handle.read(), dtype=_LITTLE_ENDIAN[dtype])

    arrays = collections.OrderedDict()
    for name, shape, offset, size in entries:
        if int(np.prod(shape)) != size or offset + size > flat.size:
            raise CheckpointError('Tensor %s does not fit the data file.' %
                                  name)
        arrays[name] = flat[offset:offset + size].astype(
            np.float64).reshape(shape)
    return arrays


def restore_checkpoint(directory, parameter_set):
    """Copies checkpoint values into |parameter_set|. Names and shapes must
    match exactly."""
    arrays = load_checkpoint(directory)
    if list(arrays) != parameter_set.names():
        missing = sorted(set(parameter_set.names()) - set(arrays))
        unexpected = sorted(set(arrays) - set(parameter_set.names()))
        raise CheckpointError(
            'Checkpoint does not match the model. Missing: %s. Unexpected: '
            '%s.' % (missing, unexpected))
    for name, tensor in parameter_set:
        if arrays[name].shape != tensor.shape:
            raise tensor_lib.ShapeMismatchError(
                'Tensor %s has shape %s in the checkpoint, %s in the model.' %
                (name, arrays[name].shape, tensor.shape))
        tensor.value[...] = arrays[name]
