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
"""Pipeline variants and the per-episode training step."""
import collections
import math

import numpy as np

from geometry import frames
from model import situnet
from situation import targets

MODES = (
    'full',
    'no-situation-text',
    'corrupted-supervision',
    'gt-as-input-token',
    'gt-as-intermediate',
    'direct-regression',
)

_PLANS = {
    'full': situnet.FULL_PLAN,
    'no-situation-text': situnet.ModePlan(situation_text=False,
                                          gt_token=False,
                                          estimator='anchors'),
    'corrupted-supervision': situnet.FULL_PLAN,
    'gt-as-input-token': situnet.ModePlan(situation_text=True,
                                          gt_token=True,
                                          estimator='anchors'),
    'gt-as-intermediate': situnet.FULL_PLAN,
    'direct-regression': situnet.ModePlan(situation_text=True,
                                          gt_token=False,
                                          estimator='regression'),
}

LossConfig = collections.namedtuple('LossConfig', [
    'sigma_columns',
    'enlarge',
    'rotation_weight',
    'position_loss',
    'rotation_supervision',
    'situation_weight',
    'qa_weight',
    'teacher_forcing',
])

DEFAULT_LOSS_CONFIG = LossConfig(
    sigma_columns=2.0,
    enlarge=targets.DEFAULT_ENLARGE,
    rotation_weight=targets.DEFAULT_ROTATION_WEIGHT,
    position_loss='bce',
    rotation_supervision='peak',
    situation_weight=1.0,
    qa_weight=1.0,
    teacher_forcing=0.5)

ModeResult = collections.namedtuple(
    'ModeResult', ['answer', 'logits', 'situation', 'forward'])

StepLoss = collections.namedtuple('StepLoss', ['total', 'situation', 'qa'])


class UnknownModeError(ValueError):
    """Raised for a mode name outside MODES."""


def plan_for(mode):
    """Returns the ModePlan wiring |mode|."""
    if mode not in _PLANS:
        raise UnknownModeError('Unknown mode: %s. Expected one of %s.' %
                               (mode, ', '.join(MODES)))
    return _PLANS[mode]


def corrupted_situation(bounds, rng):
    """Draws a pose uniformly over the x-y extent of |bounds| with a uniform
    heading. z is the floor of the bounds."""
    low, high = np.asarray(bounds[0]), np.asarray(bounds[1])
    position = np.array([
        rng.uniform(low[0], high[0]),
        rng.uniform(low[1], high[1]), low[2]
    ])
    return frames.SituationVector.from_yaw(position,
                                           rng.uniform(-math.pi, math.pi))


def supervision_situation(mode, inputs, rng):
    """The pose a training episode is supervised with: the ground truth, or a
    random pose for corrupted supervision."""
    if mode == 'corrupted-supervision':
        return corrupted_situation(inputs.tokens.bounds, rng)
    return inputs.situation


def run_mode(model, inputs, mode):
    """Runs inference for |mode|. Returns the predicted answer index, the
    logits and the situation the mode reports."""
    plan = plan_for(mode)
    pe_situation = None
    if mode == 'gt-as-intermediate':
        pe_situation = inputs.situation
    forward = model.forward(inputs, plan, pe_situation)
    situation = inputs.situation if mode == 'gt-as-intermediate' else (
        forward.estimate)
    return ModeResult(int(np.argmax(forward.logits)), forward.logits,
                      situation, forward)


def answer_loss(logits, answer):
    """Softmax cross-entropy of |answer| and its gradient."""
    shifted = logits - logits.max()
    log_normalizer = math.log(np.exp(shifted).sum())
    probabilities = np.exp(shifted - log_normalizer)
    gradient = probabilities.copy()
    gradient[answer] -= 1.0
    return log_normalizer - shifted[answer], gradient


def regression_loss(pose_vector, target_vector, rotation_weight):
    """L1 loss of a regressed pose vector and its gradient."""
    difference = pose_vector - target_vector
    weights = np.ones_like(difference)
    weights[3:] = rotation_weight
    return float((weights * np.abs(difference)).sum()), weights * np.sign(
        difference)


def use_target_situation(mode, loss_config, rng):
    """Draws the teacher forcing coin for one batch. With probability
    loss_config.teacher_forcing every episode of the batch feeds its
    supervision pose into the situational embedding instead of the
    estimate; gt-as-intermediate always does."""
    return (mode == 'gt-as-intermediate' or
            bool(rng.random() < loss_config.teacher_forcing))


def episode_loss(model,
                 inputs,
                 mode,
                 loss_config,
                 target_situation,
                 use_target,
                 backward=True):
    """Returns the StepLoss of one episode, backpropagating it when
    |backward| is set. |use_target| feeds |target_situation| into the
    situational embedding."""
    plan = plan_for(mode)
    forward = model.forward(inputs, plan,
                            target_situation if use_target else None)
    tokens = inputs.tokens

    d_token_predictions = d_pose_vector = None
    if plan.estimator == 'anchors':
        anchor_targets = targets.gaussian_targets(
            tokens.anchors,
            target_situation,
            loss_config.sigma_columns * tokens.pitch,
            loss_config.enlarge,
            mask=tokens.mask,
            representation=model.config.rotation_repr,
            supervision=loss_config.rotation_supervision)
        situation = targets.situation_loss(forward.token_predictions,
                                           anchor_targets,
                                           loss_config.rotation_weight,
                                           loss_config.position_loss)
        situation_value = situation.total
        d_token_predictions = loss_config.situation_weight * situation.gradient
    else:
        situation_value, d_pose_vector = regression_loss(
            forward.pose_vector,
            situnet.pose_to_vector(target_situation, tokens.bounds),
            loss_config.rotation_weight)
        d_pose_vector = loss_config.situation_weight * d_pose_vector

    qa_value, d_logits = answer_loss(forward.logits, inputs.answer)
    if loss_config.qa_weight:
        d_logits = loss_config.qa_weight * d_logits
    else:
        d_logits = None
    if backward:
        model.backward(forward, d_token_predictions, d_pose_vector, d_logits)
    total = (loss_config.situation_weight * situation_value +
             loss_config.qa_weight * qa_value)
    return StepLoss(float(total), float(situation_value), float(qa_value))
