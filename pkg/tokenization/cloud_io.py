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
"""Reading and writing point cloud files.

Clouds are stored as PLY files with one vertex element whose properties are
x y z r g b (double, colors in [0, 1]) and category (int, -1 = unlabeled):

  ply
  format binary_little_endian 1.0      (or: format ascii 1.0)
  element vertex <count>
  property double x
  ...
  property int category
  end_header
  <rows>
"""
import io

import numpy as np

from common import filesystem
from tokenization import voxelize

FIELDS = ('x', 'y', 'z', 'r', 'g', 'b', 'category')
_PLY_TYPES = {
    'double': '<f8',
    'float': '<f4',
    'int': '<i4',
}
_VERTEX_DTYPE = np.dtype([(field, '<f8') for field in FIELDS[:-1]] +
                         [('category', '<i4')])


class CloudFileError(ValueError):
    """Raised when a cloud file does not follow the documented format."""


def _header(count, binary):
    lines = [
        'ply',
        'format %s 1.0' % ('binary_little_endian' if binary else 'ascii'),
        'element vertex %d' % count,
    ]
    lines.extend('property double %s' % field for field in FIELDS[:-1])
    lines.append('property int category')
    lines.append('end_header')
    return ('\n'.join(lines) + '\n').encode('ascii')


def write_cloud(path, point_cloud, binary=True):
    """Atomically writes |point_cloud| to |path|."""
    rows = np.empty(len(point_cloud), dtype=_VERTEX_DTYPE)
    for axis, field in enumerate('xyz'):
        rows[field] = point_cloud.points[:, axis]
    for channel, field in enumerate('rgb'):
        rows[field] = point_cloud.colors[:, channel]
    rows['category'] = point_cloud.categories

    if binary:
        body = rows.tobytes()
    else:
        buffer = io.StringIO()
        np.savetxt(buffer,
                   np.column_stack([
                       point_cloud.points, point_cloud.colors,
                       point_cloud.categories
                   ]),
                   fmt=['%.17g'] * 6 + ['%d'])
        body = buffer.getvalue().encode('ascii')
    filesystem.write_atomic(path, _header(len(point_cloud), binary) + body,
                            'wb')


def _parse_header(handle):
    """Returns (is_binary, count, dtype) after consuming the header."""
    if handle.readline().strip() != b'ply':
        raise CloudFileError('Missing "ply" magic line.')
    is_binary = None
    count = None
    properties = []
    for raw_line in handle:
        line = raw_line.decode('ascii').strip()
        if line == 'end_header':
            break
        parts = line.split()
        if not parts or parts[0] == 'comment':
            continue
        if parts[0] == 'format':
            if parts[1] not in ('ascii', 'binary_little_endian'):
                raise CloudFileError('Unsupported format: %s.' % parts[1])
            is_binary = parts[1] == 'binary_little_endian'
        elif parts[0] == 'element':
            if parts[1] != 'vertex':
                raise CloudFileError('Unsupported element: %s.' % parts[1])
            count = int(parts[2])
        elif parts[0] == 'property':
            if parts[1] not in _PLY_TYPES:
                raise CloudFileError('Unsupported property type: %s.' %
                                     parts[1])
            properties.append((parts[2], _PLY_TYPES[parts[1]]))
    else:
        raise CloudFileError('Missing end_header.')

    if is_binary is None or count is None:
        raise CloudFileError('Header lacks format or vertex count.')
    names = tuple(name for name, _ in properties)
    if names != FIELDS:
        raise CloudFileError('Expected fields %s, found %s.' %
                             (' '.join(FIELDS), ' '.join(names)))
    return is_binary, count, np.dtype(properties)


def read_cloud(path):
    """Reads a PointCloud written by write_cloud (or any PLY file with the
    same fields)."""
    with open(path, 'rb') as handle:
        is_binary, count, dtype = _parse_header(handle)
        body = handle.read()

    if is_binary:
        if len(body) < count * dtype.itemsize:
            raise CloudFileError('Expected %d vertices, file is truncated.' %
                                 count)
        rows = np.frombuffer(body, dtype=dtype, count=count)
        values = np.column_stack([rows[field] for field in FIELDS])
    else:
        values = np.loadtxt(io.StringIO(body.decode('ascii')),
                            ndmin=2).reshape(-1, len(FIELDS))
        if len(values) != count:
            raise CloudFileError('Expected %d vertices, found %d.' %
                                 (count, len(values)))
    return voxelize.PointCloud(values[:, :3], values[:, 3:6],
                               values[:, 6].astype(np.int64))
