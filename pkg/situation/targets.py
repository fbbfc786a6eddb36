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
"""Anchor-based situation targets, losses and decoding.

Situation estimation is posed as per-token classification: each visual token
predicts a position likelihood logit (channel 0) and a rotation vector
(remaining channels). Targets are a Gaussian of the horizontal distance
between token anchors and the ground-truth position, normalized so the peak is
exactly 1.
"""
import collections

import numpy as np

from geometry import frames
from geometry import rotations

DEFAULT_ENLARGE = 2.0
DEFAULT_ROTATION_WEIGHT = 1.0
ROTATION_MASK_THRESHOLD = 0.5
FOCAL_ALPHA = 2.0
FOCAL_BETA = 4.0

POSITION_LOSSES = ('bce', 'focal')
ROTATION_SUPERVISION = ('peak', 'all')


class NoRealTokensError(ValueError):
    """Raised when every token is padding."""


class ShapeMismatchError(ValueError):
    """Raised when predictions and targets disagree in shape."""


def head_channels(representation='6d'):
    """Width of the per-token prediction: 1 likelihood logit plus the
    rotation channels of |representation|."""
    return 1 + rotations.ROTATION_CHANNELS[representation]


def default_sigma(pitch):
    """Default kernel width: two token columns."""
    return 2.0 * pitch


def _real_mask(mask, num_tokens):
    if mask is None:
        mask = np.ones(num_tokens, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (num_tokens,):
        raise ShapeMismatchError('Mask of shape %s for %d tokens.' %
                                 (mask.shape, num_tokens))
    if not mask.any():
        raise NoRealTokensError('All tokens are padding.')
    return mask


class AnchorTargets:
    """Soft position likelihoods and rotation targets for every token."""

    def __init__(self, likelihood, rotation, rot_mask, token_mask,
                 representation='6d'):
        self.likelihood = likelihood
        self.rotation = rotation
        self.rot_mask = rot_mask
        self.token_mask = token_mask
        self.representation = representation

    def __len__(self):
        return len(self.likelihood)

    @property
    def rot6d(self):
        """Rotation targets as 6D vectors, whatever the representation."""
        if self.representation == '6d':
            return self.rotation
        matrix = rotations.decode_rotation(self.rotation[0],
                                           self.representation)
        return np.tile(rotations.matrix_to_rot6d(matrix), (len(self), 1))

    def as_predictions(self, eps=1e-6):
        """Returns an N x (1 + C) prediction whose logits and rotation
        channels reproduce these targets."""
        probabilities = np.clip(self.likelihood, eps, 1.0 - eps)
        logits = np.log(probabilities) - np.log1p(-probabilities)
        return np.concatenate([logits[:, None], self.rotation], axis=1)


def gaussian_targets(anchors,
                     gt,
                     sigma,
                     enlarge=DEFAULT_ENLARGE,
                     mask=None,
                     representation='6d',
                     supervision='peak'):
    """Builds AnchorTargets for the ground-truth situation |gt|.

    p_i = exp(-d_i^2 / (2 (enlarge * sigma)^2)) with d_i the horizontal
    distance from anchor i to gt, divided by its maximum over real tokens.
    Rotation is supervised where p_i >= 0.5 ('peak') or on every real token
    ('all')."""
    if sigma <= 0:
        raise ValueError('Sigma must be positive, got %s.' % sigma)
    if enlarge < 1:
        raise ValueError('Enlarge factor must be at least 1, got %s.' %
                         enlarge)
    if supervision not in ROTATION_SUPERVISION:
        raise ValueError('Unknown rotation supervision: %s.' % supervision)
    anchors = np.asarray(anchors, dtype=np.float64)
    mask = _real_mask(mask, len(anchors))

    squared_distance = ((anchors[:, 0] - gt.position[0])**2 +
                        (anchors[:, 1] - gt.position[1])**2)
    # Normalizing in log space keeps far-away peaks from underflowing.
    log_likelihood = -squared_distance / (2.0 * (enlarge * sigma)**2)
    log_likelihood -= log_likelihood[mask].max()
    likelihood = np.where(mask, np.exp(log_likelihood), 0.0)

    if supervision == 'peak':
        rot_mask = mask & (likelihood >= ROTATION_MASK_THRESHOLD)
    else:
        rot_mask = mask.copy()
    rotation = np.tile(rotations.encode_rotation(gt.rotation, representation),
                       (len(anchors), 1))
    return AnchorTargets(likelihood, rotation, rot_mask, mask, representation)


SituationLoss = collections.namedtuple(
    'SituationLoss', ['total', 'position', 'rotation', 'gradient'])


def _softplus(values):
    return np.logaddexp(0.0, values)


def _sigmoid(values):
    return np.exp(-_softplus(-values))


def _bce(logits, likelihood, real):
    """Mean soft-target BCE over real tokens and its gradient."""
    num_real = real.sum()
    per_token = _softplus(logits) - likelihood * logits
    loss = per_token[real].sum() / num_real
    gradient = np.where(real, (_sigmoid(logits) - likelihood) / num_real, 0.0)
    return loss, gradient


def _focal(logits, likelihood, real):
    """Gaussian focal loss normalized by the number of peak tokens."""
    probability = _sigmoid(logits)
    log_p = -_softplus(-logits)
    log_not_p = -_softplus(logits)
    positive = real & (likelihood >= 1.0 - 1e-12)
    negative = real & ~positive
    num_positive = max(int(positive.sum()), 1)

    alpha = FOCAL_ALPHA
    not_p = 1.0 - probability
    weight = (1.0 - likelihood)**FOCAL_BETA
    positive_loss = -(not_p**alpha) * log_p
    negative_loss = -weight * probability**alpha * log_not_p
    positive_grad = (alpha * probability * not_p**alpha * log_p -
                     not_p**(alpha + 1))
    negative_grad = weight * (probability**(alpha + 1) - alpha *
                              probability**alpha * not_p * log_not_p)

    loss = (positive_loss[positive].sum() +
            negative_loss[negative].sum()) / num_positive
    gradient = (np.where(positive, positive_grad, 0.0) +
                np.where(negative, negative_grad, 0.0)) / num_positive
    return loss, gradient


def situation_loss(predictions,
                   targets,
                   rotation_weight=DEFAULT_ROTATION_WEIGHT,
                   position_loss='bce'):
    """Returns SituationLoss for |predictions| (N x (1 + C)) against
    |targets|. The gradient is with respect to |predictions|."""
    predictions = np.asarray(predictions, dtype=np.float64)
    expected_shape = (len(targets), 1 + targets.rotation.shape[1])
    if predictions.shape != expected_shape:
        raise ShapeMismatchError('Predictions of shape %s, expected %s.' %
                                 (predictions.shape, expected_shape))
    if position_loss not in POSITION_LOSSES:
        raise ValueError('Unknown position loss: %s.' % position_loss)
    real = targets.token_mask
    if not real.any():
        raise NoRealTokensError('All tokens are padding.')

    loss_fn = _bce if position_loss == 'bce' else _focal
    position, position_grad = loss_fn(predictions[:, 0], targets.likelihood,
                                      real)

    gradient = np.zeros_like(predictions)
    gradient[:, 0] = position_grad
    num_supervised = targets.rot_mask.sum()
    rotation = 0.0
    if num_supervised:
        difference = predictions[:, 1:] - targets.rotation
        supervised = targets.rot_mask
        rotation = np.abs(difference[supervised]).sum() / num_supervised
        gradient[supervised, 1:] = (rotation_weight *
                                    np.sign(difference[supervised]) /
                                    num_supervised)
    total = position + rotation_weight * rotation
    return SituationLoss(float(total), float(position), float(rotation),
                         gradient)


def peak_index(predictions, mask=None):
    """Index of the real token with the largest likelihood logit. Ties go to
    the lowest index."""
    predictions = np.asarray(predictions, dtype=np.float64)
    mask = _real_mask(mask, len(predictions))
    scores = np.where(mask, predictions[:, 0], -np.inf)
    return int(np.argmax(scores))


def decode_situation(predictions, anchors, mask=None, representation='6d'):
    """Decodes the situation at the peak token: its anchor (z included) and
    the heading of its rotation channels."""
    index = peak_index(predictions, mask)
    matrix = rotations.decode_rotation(
        np.asarray(predictions)[index, 1:], representation)
    return frames.SituationVector.from_matrix(anchors[index], matrix)
