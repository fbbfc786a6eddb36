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
"""A pytest conftest.py file that defines fixtures."""
import os

import pytest

from experiment import config as config_lib
from experiment import dataset as dataset_lib

# pylint: disable=redefined-outer-name

# Small enough to generate, train and evaluate in a few seconds.
TINY_OVERRIDES = {
    'seeds': [0],
    'modes': ['full', 'gt-as-intermediate'],
    'dataset.num_scenes': 5,
    'dataset.episodes_per_scene': 3,
    'dataset.point_density': 30.0,
    'dataset.room_min': 3.5,
    'dataset.room_max': 4.0,
    'tokens.voxel_size': 0.5,
    'tokens.num_tokens': 64,
    'model.dim': 8,
    'model.heads': 2,
    'model.fusion_layers': 1,
    'model.reencode_layers': 1,
    'model.pe_hidden': 8,
    'model.text_length': 16,
    'training.epochs': 2,
    'training.batch_size': 4,
    'training.lr': 1e-3,
    'training.milestones': [1],
}


@pytest.fixture
def tiny_config(tmp_path):
    """A resolved config writing into a fresh run directory."""
    overrides = dict(TINY_OVERRIDES, output_dir=str(tmp_path / 'run'))
    return config_lib.resolve({}, overrides)


@pytest.fixture
def tiny_dataset(tiny_config):
    """The generated dataset of tiny_config."""
    directory = dataset_lib.dataset_dir(tiny_config['output_dir'])
    return dataset_lib.generate_dataset(tiny_config, directory)


@pytest.fixture
def tiny_config_file(tiny_config):
    """tiny_config written as a yaml file."""
    config_lib.write_config(tiny_config['output_dir'], tiny_config)
    return os.path.join(tiny_config['output_dir'], config_lib.CONFIG_FILENAME)
