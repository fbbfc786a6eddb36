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
"""A pytest conftest.py file that defines fixtures many tests might need
(such as a small scene, a synthetic token set and a tiny model)."""

import os
from unittest import mock

import numpy as np
import pytest

from model import situnet
from scenegen import scenes
from tokenization import voxelize

# pylint: disable=redefined-outer-name

SMALL_GRID = 4
SMALL_PITCH = 0.5
SMALL_PADDING = 3


@pytest.fixture
def environ():
    """Patch environment."""
    patcher = mock.patch.dict(os.environ, {})
    patcher.start()
    yield
    patcher.stop()


@pytest.fixture
def small_scene():
    """A 4 x 3 m room with three objects, one of them a second chair."""
    objects = (
        scenes.SceneObject(0, 'chair', 'red', (1.0, 1.0, 0.45),
                           (0.5, 0.5, 0.9), 0.0),
        scenes.SceneObject(1, 'table', 'brown', (3.0, 1.0, 0.375),
                           (1.2, 0.8, 0.75), 0.0),
        scenes.SceneObject(2, 'chair', 'blue', (2.0, 2.4, 0.45),
                           (0.5, 0.5, 0.9), 0.0),
    )
    return scenes.Scene('small', 4.0, 3.0, 2.5, objects)


@pytest.fixture
def small_tokens():
    """A 4 x 4 grid of BEV tokens over a 2 x 2 m area plus padding tokens."""
    rng = np.random.default_rng(0)
    num_real = SMALL_GRID * SMALL_GRID
    num_tokens = num_real + SMALL_PADDING
    i, j = np.meshgrid(np.arange(SMALL_GRID), np.arange(SMALL_GRID),
                       indexing='ij')
    columns = -np.ones((num_tokens, 2), dtype=np.int64)
    columns[:num_real] = np.stack([i.ravel(), j.ravel()], axis=1)
    anchors = np.zeros((num_tokens, 3))
    anchors[:num_real, :2] = (columns[:num_real] + 0.5) * SMALL_PITCH
    anchors[:num_real, 2] = rng.uniform(0.0, 1.0, size=num_real)
    features = np.zeros((num_tokens, voxelize.feature_channels()))
    features[:num_real] = rng.uniform(0.0, 1.0, size=(num_real,
                                                      features.shape[1]))
    mask = np.arange(num_tokens) < num_real
    bounds = np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 1.0]])
    return voxelize.TokenSet(anchors, features, mask, columns, bounds,
                             SMALL_PITCH)


@pytest.fixture
def tiny_model_config():
    """A model small enough for finite-difference gradient checks."""
    return situnet.DEFAULT_MODEL_CONFIG._replace(dim=8,
                                                 heads=2,
                                                 fusion_layers=1,
                                                 reencode_layers=1,
                                                 answer_layers=1,
                                                 pe_hidden=8,
                                                 text_length=12,
                                                 situated_scale=2.0)


@pytest.fixture
def tmp_run_dir(tmp_path):
    """An empty run directory on the real filesystem."""
    run_dir = tmp_path / 'run'
    run_dir.mkdir()
    return str(run_dir)
