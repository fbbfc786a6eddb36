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
"""Point cloud voxelization, bird's-eye-view projection and visual token
sampling.

A cloud is cut into cubic voxels. Each occupied voxel gets the feature
[log1p(point count), mean color (3), mean height, one-hot majority category
(K)]. Voxel features are averaged along z into columns on the x-y plane and a
fixed number of columns is kept as visual tokens. Each token is anchored at its
column center, with z the mean height of its occupied voxels.
"""
import collections

import numpy as np

DEFAULT_VOXEL_SIZE = 0.02
DEFAULT_NUM_TOKENS = 256
DEFAULT_NUM_CATEGORIES = 12

# Features that precede the category one-hot.
BASE_FEATURE_CHANNELS = 5

SAMPLING_STRATEGIES = ('occupancy', 'random')


class EmptyCloudError(ValueError):
    """Raised when a point cloud has no points."""


def feature_channels(num_categories=DEFAULT_NUM_CATEGORIES):
    """Returns C_v, the width of voxel and token features."""
    return BASE_FEATURE_CHANNELS + num_categories


class PointCloud:
    """Points in meters with per-point colors in [0, 1] and category ids (-1
    for unlabeled points)."""

    def __init__(self, points, colors=None, categories=None):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3 or not len(points):
            raise EmptyCloudError('Point cloud must be a non-empty N x 3 '
                                  'array.')
        if not np.all(np.isfinite(points)):
            raise ValueError('Point cloud has non-finite coordinates.')
        if colors is None:
            colors = np.zeros_like(points)
        if categories is None:
            categories = -np.ones(len(points), dtype=np.int64)
        colors = np.asarray(colors, dtype=np.float64)
        categories = np.asarray(categories, dtype=np.int64)
        if colors.shape != points.shape or categories.shape != (len(points),):
            raise ValueError('Colors and categories must match the points.')
        self.points = points
        self.colors = colors
        self.categories = categories

    def __len__(self):
        return len(self.points)

    @property
    def bounds(self):
        """Axis-aligned bounds as a 2 x 3 array (min, max)."""
        return np.stack([self.points.min(axis=0), self.points.max(axis=0)])


class VoxelGrid:
    """Occupied voxels of a cloud, stored as rows sorted by (i, j, k)."""

    def __init__(self, voxel_size, origin, indices, counts, mean_color,
                 mean_height, category_histogram, bounds):
        self.voxel_size = voxel_size
        self.origin = origin
        self.indices = indices
        self.counts = counts
        self.mean_color = mean_color
        self.mean_height = mean_height
        self.category_histogram = category_histogram
        self.bounds = bounds

    def __len__(self):
        return len(self.indices)

    @property
    def num_categories(self):
        """Number of category histogram bins."""
        return self.category_histogram.shape[1]

    @property
    def lattice_indices(self):
        """Cell indices on the global voxel lattice anchored at 0."""
        offset = np.round(self.origin / self.voxel_size).astype(np.int64)
        return self.indices + offset

    def cell_centers(self):
        """Centers of the occupied cells in meters."""
        return self.origin + (self.indices + 0.5) * self.voxel_size

    def features(self):
        """Returns the M x C_v voxel feature matrix."""
        one_hot = np.zeros_like(self.category_histogram, dtype=np.float64)
        labeled = self.category_histogram.sum(axis=1) > 0
        # argmax breaks ties toward the lowest category id.
        majority = np.argmax(self.category_histogram, axis=1)
        one_hot[np.nonzero(labeled)[0], majority[labeled]] = 1.0
        return np.concatenate([
            np.log1p(self.counts)[:, None],
            self.mean_color,
            self.mean_height[:, None],
            one_hot,
        ],
                              axis=1)

    def as_dict(self):
        """Returns {(i, j, k): (count, mean color, histogram, mean height)}."""
        return {
            tuple(int(value) for value in index):
            (int(count), tuple(color), tuple(histogram), float(height))
            for index, count, color, histogram, height in zip(
                self.indices, self.counts, self.mean_color,
                self.category_histogram, self.mean_height)
        }


BevMap = collections.namedtuple(
    'BevMap',
    ['voxel_size', 'origin', 'columns', 'anchors', 'features', 'occupancy',
     'bounds'])


class TokenSet:
    """N_v visual tokens: anchors (N_v x 3, meters), features (N_v x C_v) and a
    mask that is False for padding tokens."""

    def __init__(self, anchors, features, mask, columns, bounds, pitch):
        self.anchors = anchors
        self.features = features
        self.mask = mask
        self.columns = columns
        self.bounds = bounds
        self.pitch = pitch

    def __len__(self):
        return len(self.anchors)

    @property
    def num_real(self):
        """Number of non-padding tokens."""
        return int(self.mask.sum())

    @property
    def cell_diagonal(self):
        """Horizontal diagonal of one token column."""
        return float(np.sqrt(2.0) * self.pitch)

    def normalized_anchors(self):
        """Anchors mapped to [-1, 1] per axis of the scene bounds. Padding
        anchors stay at zero."""
        normalized = normalize_coordinates(self.anchors, self.bounds)
        normalized[~self.mask] = 0.0
        return normalized


def normalize_coordinates(coordinates, bounds):
    """Maps |coordinates| affinely so that |bounds| (2 x 3) becomes
    [-1, 1]^3."""
    low, high = np.asarray(bounds[0]), np.asarray(bounds[1])
    extent = np.where(high - low > 1e-9, high - low, 1.0)
    return 2.0 * (np.asarray(coordinates) - low) / extent - 1.0


def _segment_sum(values, inverse, num_segments):
    """Sums rows of |values| that share an |inverse| id."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        return np.bincount(inverse, weights=values, minlength=num_segments)
    return np.stack([
        np.bincount(inverse, weights=values[:, channel],
                    minlength=num_segments)
        for channel in range(values.shape[1])
    ],
                    axis=1)


def voxelize(point_cloud,
             voxel_size=DEFAULT_VOXEL_SIZE,
             num_categories=DEFAULT_NUM_CATEGORIES):
    """Returns the VoxelGrid of |point_cloud|. Cell indices are
    floor((p - origin) / voxel_size), with the origin the cloud's minimum
    corner snapped down to the voxel lattice."""
    if voxel_size <= 0:
        raise ValueError('Voxel size must be positive, got %s.' % voxel_size)
    if not len(point_cloud):
        raise EmptyCloudError('Cannot voxelize an empty cloud.')
    if np.any(point_cloud.categories >= num_categories):
        raise ValueError('Category id out of range for %d categories.' %
                         num_categories)

    points = point_cloud.points
    origin = np.floor(points.min(axis=0) / voxel_size) * voxel_size
    point_indices = np.floor((points - origin) / voxel_size).astype(np.int64)
    indices, inverse, counts = np.unique(point_indices,
                                         axis=0,
                                         return_inverse=True,
                                         return_counts=True)
    inverse = inverse.reshape(-1)
    num_cells = len(indices)

    mean_color = _segment_sum(point_cloud.colors, inverse,
                              num_cells) / counts[:, None]
    mean_height = _segment_sum(points[:, 2], inverse, num_cells) / counts

    labeled = point_cloud.categories >= 0
    histogram = np.bincount(
        inverse[labeled] * num_categories + point_cloud.categories[labeled],
        minlength=num_cells * num_categories).reshape(num_cells,
                                                      num_categories)
    return VoxelGrid(voxel_size, origin, indices, counts, mean_color,
                     mean_height, histogram, point_cloud.bounds)


def bev_project(grid):
    """Averages voxel features along z. Each occupied (i, j) column becomes
    one BEV cell anchored at (center x, center y, mean occupied center z)."""
    if not len(grid):
        raise EmptyCloudError('Cannot project an empty grid.')
    voxel_features = grid.features()
    columns, inverse, voxels_per_column = np.unique(grid.indices[:, :2],
                                                    axis=0,
                                                    return_inverse=True,
                                                    return_counts=True)
    inverse = inverse.reshape(-1)
    num_columns = len(columns)
    features = _segment_sum(voxel_features, inverse,
                            num_columns) / voxels_per_column[:, None]
    centers = grid.cell_centers()
    anchor_z = _segment_sum(centers[:, 2], inverse,
                            num_columns) / voxels_per_column
    anchors = np.concatenate([
        grid.origin[:2] + (columns + 0.5) * grid.voxel_size,
        anchor_z[:, None],
    ],
                             axis=1)
    occupancy = np.bincount(inverse, weights=grid.counts,
                            minlength=num_columns).astype(np.int64)
    return BevMap(grid.voxel_size, grid.origin, columns, anchors, features,
                  occupancy, grid.bounds)


def sample_tokens(bev_map,
                  num_tokens=DEFAULT_NUM_TOKENS,
                  seed=0,
                  strategy='occupancy'):
    """Selects |num_tokens| BEV cells as visual tokens.

    'occupancy' keeps the cells with the most points (ties broken by
    lexicographic (i, j)); 'random' draws cells uniformly with |seed|. With
    fewer cells than |num_tokens| every cell is kept and the rest are masked
    zero tokens. Selected tokens are laid out in (i, j) order."""
    if num_tokens < 1:
        raise ValueError('Token count must be at least 1.')
    if strategy not in SAMPLING_STRATEGIES:
        raise ValueError('Unknown sampling strategy: %s.' % strategy)

    num_cells = len(bev_map.columns)
    if num_cells <= num_tokens:
        selected = np.arange(num_cells)
    elif strategy == 'occupancy':
        order = np.lexsort((bev_map.columns[:, 1], bev_map.columns[:, 0],
                            -bev_map.occupancy))
        selected = np.sort(order[:num_tokens])
    else:
        rng = np.random.default_rng(seed)
        selected = np.sort(rng.choice(num_cells, num_tokens, replace=False))

    num_selected = len(selected)
    num_features = bev_map.features.shape[1]
    anchors = np.zeros((num_tokens, 3))
    features = np.zeros((num_tokens, num_features))
    columns = -np.ones((num_tokens, 2), dtype=np.int64)
    mask = np.zeros(num_tokens, dtype=bool)
    anchors[:num_selected] = bev_map.anchors[selected]
    features[:num_selected] = bev_map.features[selected]
    columns[:num_selected] = bev_map.columns[selected]
    mask[:num_selected] = True
    return TokenSet(anchors, features, mask, columns, bev_map.bounds,
                    bev_map.voxel_size)


def tokenize_cloud(point_cloud,
                   voxel_size=DEFAULT_VOXEL_SIZE,
                   num_tokens=DEFAULT_NUM_TOKENS,
                   num_categories=DEFAULT_NUM_CATEGORIES,
                   seed=0,
                   strategy='occupancy'):
    """Voxelizes, projects and samples |point_cloud| into a TokenSet."""
    grid = voxelize(point_cloud, voxel_size, num_categories)
    return sample_tokens(bev_project(grid), num_tokens, seed, strategy)
