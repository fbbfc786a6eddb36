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
"""Tests for dataset.py."""
import os
from unittest import mock

import pytest

from common import filesystem
from experiment import dataset as dataset_lib
from model import text
from scenegen import scenes
from test_libs import utils as test_utils

# pylint: disable=redefined-outer-name


def _file_contents(directory):
    return {
        os.path.relpath(path, directory): filesystem.read(path, 'rb')
        for path in filesystem.list_files(directory)
    }


def test_generate_writes_every_file(tiny_dataset):
    """Tests the dataset directory layout."""
    directory = tiny_dataset.directory
    for filename in (dataset_lib.SCENES_FILENAME, dataset_lib.TRAIN_FILENAME,
                     dataset_lib.VAL_FILENAME, dataset_lib.VOCAB_FILENAME):
        assert os.path.exists(os.path.join(directory, filename))
    scene_ids = [scene.scene_id for scene in tiny_dataset.scenes]
    assert scene_ids == ['scene%04d' % index for index in range(5)]
    for scene in tiny_dataset.scenes:
        assert os.path.exists(dataset_lib.cloud_path(directory, scene.scene_id))


def test_split_by_scene(tiny_dataset):
    """Tests that no scene has episodes in both splits."""
    train_scenes = {episode.scene_id for episode in tiny_dataset.train}
    val_scenes = {episode.scene_id for episode in tiny_dataset.val}
    assert val_scenes == {'scene0004'}
    assert not train_scenes & val_scenes
    assert len(tiny_dataset.train) + len(tiny_dataset.val) <= 15


@pytest.mark.parametrize('num_scenes,fraction,expected', [(40, 0.2, 8),
                                                           (5, 0.2, 1),
                                                           (1, 0.5, 0),
                                                           (3, 0.9, 2)])
def test_num_val_scenes(num_scenes, fraction, expected):
    """Tests that at least one scene stays in training."""
    assert dataset_lib.num_val_scenes(num_scenes, fraction) == expected


def test_vocabularies_come_from_training(tiny_dataset):
    """Tests that the vocabularies cover the training split."""
    for episode in tiny_dataset.train:
        assert episode.answer in tiny_dataset.answers
        for word in text.tokenize(episode.question):
            assert word in tiny_dataset.vocab


def test_load_matches_generate(tiny_dataset):
    """Tests that loading gives back the generated dataset."""
    loaded = dataset_lib.load_dataset(tiny_dataset.directory)
    assert loaded.scenes == tiny_dataset.scenes
    assert loaded.vocab.words == tiny_dataset.vocab.words
    assert loaded.answers.answers == tiny_dataset.answers.answers
    assert [episode.episode_id for episode in loaded.train
           ] == [episode.episode_id for episode in tiny_dataset.train]
    for loaded_episode, episode in zip(loaded.val, tiny_dataset.val):
        assert loaded_episode.question == episode.question
        assert loaded_episode.answer == episode.answer
        assert loaded_episode.situation.yaw == pytest.approx(
            episode.situation.yaw, abs=1e-12)


def test_generate_is_deterministic(tiny_config, tmp_path):
    """Tests that the same config gives byte-identical datasets."""
    first = str(tmp_path / 'first')
    second = str(tmp_path / 'second')
    dataset_lib.generate_dataset(tiny_config, first)
    dataset_lib.generate_dataset(tiny_config, second)
    assert _file_contents(first) == _file_contents(second)


def test_generate_does_not_depend_on_workers(tiny_config, tmp_path):
    """Tests that a worker pool gives the same dataset as a serial run."""
    serial = str(tmp_path / 'serial')
    pooled = str(tmp_path / 'pooled')
    dataset_lib.generate_dataset(tiny_config, serial)
    pool = test_utils.MockPool()
    with mock.patch('multiprocessing.Pool', return_value=pool):
        dataset_lib.generate_dataset(dict(tiny_config, workers=3), pooled)
    assert len(pool.func_calls) == tiny_config['dataset']['num_scenes']
    assert _file_contents(serial) == _file_contents(pooled)


def test_build_scene_retries_placement():
    """Tests that scenes whose objects cannot be placed are redrawn."""
    task = dataset_lib.SceneTask(0, 0, scenes.DEFAULT_SCENE_CONFIG, 2,
                                 ('counting',), 20.0)
    real_generate = scenes.generate_scene
    calls = []

    def flaky_generate(scene_id, seed, config):
        calls.append(seed)
        if len(calls) == 1:
            raise scenes.PlacementFailureError('No room.')
        return real_generate(scene_id, seed, config)

    with mock.patch('scenegen.scenes.generate_scene', flaky_generate):
        scene, cloud, episodes = dataset_lib.build_scene(task)
    assert len(calls) == 2
    assert calls[0] != calls[1]
    assert scene.scene_id == 'scene0000'
    assert len(cloud) > 0
    assert episodes


def test_build_scene_gives_up():
    """Tests that a scene that never fits raises PlacementFailureError."""
    config = scenes.DEFAULT_SCENE_CONFIG._replace(room_min=1.0,
                                                  room_max=1.0,
                                                  min_objects=8,
                                                  max_objects=8)
    task = dataset_lib.SceneTask(0, 0, config, 2, ('counting',), 20.0)
    with pytest.raises(scenes.PlacementFailureError):
        dataset_lib.build_scene(task)


def test_token_cache(tiny_dataset, tiny_config):
    """Tests that each scene is tokenized once with the configured size."""
    cache = dataset_lib.TokenCache(tiny_dataset.directory,
                                   tiny_config['tokens'])
    tokens = cache.get('scene0000')
    assert cache.get('scene0000') is tokens
    assert len(tokens.mask) == tiny_config['tokens']['num_tokens']
    assert tokens.pitch == tiny_config['tokens']['voxel_size']


def test_model_inputs_unknown_words(tiny_dataset, small_tokens):
    """Tests that unknown words map to <unk> and unknown answers to None."""
    episode = tiny_dataset.train[0]._replace(question='Is the zebra here?',
                                             answer='zebra')
    inputs = dataset_lib.model_inputs(episode, small_tokens, tiny_dataset.vocab,
                                      tiny_dataset.answers)
    assert inputs.question_ids[2] == text.UNK_ID
    assert inputs.answer is None
    assert inputs.tokens is small_tokens
