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
"""Trains a SituNet for one mode and seed."""
import collections
import os

import numpy as np
import pandas as pd

from analysis import plotting
from common import filesystem
from common import logs
from common import utils
from experiment import config as config_lib
from experiment import dataset as dataset_lib
from model import modes
from model import situnet
from tinynn import checkpoint
from tinynn import optim

CHECKPOINT_DIR = 'checkpoint'
TRAIN_LOG_FILENAME = 'train_log.csv'
LOSS_CURVES_FILENAME = 'loss_curves.svg'
TRAIN_LOG_COLUMNS = ['epoch', 'step', 'lr', 'total', 'situation', 'qa']

logger = logs.Logger('trainer')

TrainResult = collections.namedtuple('TrainResult', ['model', 'log'])


def build_model(config, dataset, seed):
    """A freshly initialized model sized for |dataset|."""
    return situnet.SituNet(config_lib.model_config(config), len(dataset.vocab),
                           len(dataset.answers),
                           utils.derive_seed(seed, 'model'))


def train_model(config, dataset, mode, seed):
    """Trains a model on the training split of |dataset|. Each optimizer step
    averages the gradients of batch_size episodes. Returns the model and the
    per-step loss log."""
    training = config['training']
    model = build_model(config, dataset, seed)
    parameters = model.parameter_set()
    optimizer = optim.AdamW(parameters,
                            training['lr'],
                            weight_decay=training['weight_decay'])
    schedule = optim.StepSchedule(training['lr'], training['milestones'],
                                  training['gamma'])
    loss_config = config_lib.loss_config(config)
    token_cache = dataset_lib.TokenCache(dataset.directory, config['tokens'],
                                         seed)
    rng = utils.make_rng(seed, 'train', mode)
    extras = {'mode': mode, 'seed': seed}
    logger.info('Model has %d parameters.',
                parameters.num_values(),
                extras=extras)

    rows = []
    step = 0
    for epoch in range(training['epochs']):
        lr = schedule.lr(epoch)
        order = rng.permutation(len(dataset.train))
        epoch_losses = []
        for start in range(0, len(order), training['batch_size']):
            batch = order[start:start + training['batch_size']]
            optimizer.zero_grad()
            use_target = modes.use_target_situation(mode, loss_config, rng)
            batch_losses = []
            for index in batch:
                episode = dataset.train[index]
                inputs = dataset_lib.model_inputs(
                    episode, token_cache.get(episode.scene_id), dataset.vocab,
                    dataset.answers)
                target = modes.supervision_situation(mode, inputs, rng)
                batch_losses.append(
                    modes.episode_loss(model, inputs, mode, loss_config,
                                       target, use_target))
            parameters.scale_grad(1.0 / len(batch))
            optimizer.step(lr)

            mean = np.mean(batch_losses, axis=0)
            rows.append([epoch, step, lr] + [float(value) for value in mean])
            epoch_losses.extend(batch_losses)
            step += 1

        epoch_mean = np.mean(epoch_losses, axis=0)
        logger.info('Epoch %d: loss %.4f (situation %.4f, qa %.4f).',
                    epoch,
                    *epoch_mean,
                    extras=dict(extras, epoch=epoch))
    return TrainResult(model, pd.DataFrame(rows, columns=TRAIN_LOG_COLUMNS))


def train(config, run_dir, mode=None, seed=None):
    """Trains on the dataset in |run_dir| and writes the checkpoint, the
    training log and the loss curves there."""
    mode = config['mode'] if mode is None else mode
    seed = config['seed'] if seed is None else seed
    dataset = dataset_lib.load_dataset(dataset_lib.dataset_dir(run_dir))
    return train_on(config, dataset, run_dir, mode, seed)


def train_on(config, dataset, output_dir, mode, seed):
    """Trains on |dataset| and writes the outputs into |output_dir|."""
    if not dataset.train:
        raise ValueError('The training split is empty.')
    logger.info('Training mode %s, seed %d on %d episodes.', mode, seed,
                len(dataset.train))
    result = train_model(config, dataset, mode, seed)

    filesystem.create_directory(output_dir)
    checkpoint.save_checkpoint(os.path.join(output_dir, CHECKPOINT_DIR),
                               result.model.parameter_set())
    filesystem.write_atomic(os.path.join(output_dir, TRAIN_LOG_FILENAME),
                            result.log.to_csv(index=False))
    plotting.Plotter([mode]).write_loss_curve_plot(
        result.log, os.path.join(output_dir, LOSS_CURVES_FILENAME))
    return result


def load_model(config, dataset, checkpoint_dir):
    """Restores a trained model from |checkpoint_dir|."""
    model = build_model(config, dataset, config['seed'])
    checkpoint.restore_checkpoint(checkpoint_dir, model.parameter_set())
    return model
