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
"""Tests for trainer.py."""
import os
from unittest import mock

import numpy as np
import pandas as pd
import pytest

from experiment import trainer
from model import modes
from tinynn import checkpoint

# pylint: disable=redefined-outer-name


@pytest.fixture
def trained(tiny_config, tiny_dataset):
    """A model trained for two epochs on tiny_dataset."""
    return trainer.train(tiny_config, tiny_config['output_dir'])


def test_train_writes_outputs(tiny_config, trained):
    """Tests that training writes the checkpoint, the log and the curves."""
    run_dir = tiny_config['output_dir']
    assert os.path.exists(
        os.path.join(run_dir, trainer.CHECKPOINT_DIR, checkpoint.MANIFEST))
    log = pd.read_csv(os.path.join(run_dir, trainer.TRAIN_LOG_FILENAME))
    assert list(log.columns) == trainer.TRAIN_LOG_COLUMNS
    assert sorted(log['epoch'].unique()) == [0, 1]
    assert np.all(np.isfinite(log[['total', 'situation', 'qa']].values))
    with open(os.path.join(run_dir, trainer.LOSS_CURVES_FILENAME)) as handle:
        assert handle.read().lstrip().startswith('<?xml')
    assert len(trained.log) == len(log)


def test_log_steps_and_schedule(tiny_config, tiny_dataset, trained):
    """Tests one row per batch and the learning rate drop at the
    milestone."""
    batch_size = tiny_config['training']['batch_size']
    batches_per_epoch = -(-len(tiny_dataset.train) // batch_size)
    log = trained.log
    assert len(log) == 2 * batches_per_epoch
    assert list(log['step']) == list(range(len(log)))
    lr = tiny_config['training']['lr']
    assert set(log[log['epoch'] == 0]['lr']) == {lr}
    np.testing.assert_allclose(log[log['epoch'] == 1]['lr'], lr * 0.1)


def test_training_is_deterministic(tiny_config, tiny_dataset):
    """Tests that the same seed gives the same losses and parameters."""
    first = trainer.train_model(tiny_config, tiny_dataset, 'full', 0)
    second = trainer.train_model(tiny_config, tiny_dataset, 'full', 0)
    pd.testing.assert_frame_equal(first.log, second.log)
    for (name, tensor), (_, other) in zip(first.model.parameter_set(),
                                          second.model.parameter_set()):
        np.testing.assert_array_equal(tensor.value, other.value, err_msg=name)


def test_gradients_are_averaged(tiny_config, tiny_dataset):
    """Tests that each optimizer step sees the batch mean gradient."""
    config = dict(tiny_config,
                  training=dict(tiny_config['training'], epochs=1))
    with mock.patch('tinynn.tensor.ParameterSet.scale_grad') as scale_grad:
        trainer.train_model(config, tiny_dataset, 'full', 0)
    batch_size = config['training']['batch_size']
    factors = [call[0][0] for call in scale_grad.call_args_list]
    assert factors[0] == 1.0 / batch_size
    last_batch = len(tiny_dataset.train) % batch_size or batch_size
    assert factors[-1] == 1.0 / last_batch


def test_empty_training_split(tiny_config, tiny_dataset, tmp_path):
    """Tests that training without episodes is an error."""
    with pytest.raises(ValueError):
        trainer.train_on(tiny_config, tiny_dataset._replace(train=[]),
                         str(tmp_path), 'full', 0)


def test_load_model_restores_parameters(tiny_config, tiny_dataset, trained):
    """Tests that load_model gives back the trained parameters."""
    restored = trainer.load_model(
        tiny_config, tiny_dataset,
        os.path.join(tiny_config['output_dir'], trainer.CHECKPOINT_DIR))
    for (name, tensor), (_, other) in zip(trained.model.parameter_set(),
                                          restored.parameter_set()):
        np.testing.assert_array_equal(tensor.value, other.value, err_msg=name)


def test_missing_dataset(tiny_config):
    """Tests that training a run without a dataset fails clearly."""
    with pytest.raises(FileNotFoundError):
        trainer.train(tiny_config, tiny_config['output_dir'])


def test_teacher_forcing_is_drawn_per_batch(tiny_config, tiny_dataset):
    """Tests that all episodes of a batch feed the same pose source into the
    situational embedding."""
    config = dict(tiny_config,
                  training=dict(tiny_config['training'], epochs=3))
    with mock.patch('model.modes.episode_loss',
                    wraps=modes.episode_loss) as spied_episode_loss:
        trainer.train_model(config, tiny_dataset, 'full', 0)
    use_target = [call[0][5] for call in spied_episode_loss.call_args_list]
    batch_size = config['training']['batch_size']
    num_train = len(tiny_dataset.train)
    batches = []
    for _ in range(config['training']['epochs']):
        epoch_draws = use_target[:num_train]
        use_target = use_target[num_train:]
        batches.extend(epoch_draws[start:start + batch_size]
                       for start in range(0, num_train, batch_size))
    assert not use_target
    for batch in batches:
        assert len(set(batch)) == 1
