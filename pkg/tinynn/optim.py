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
"""AdamW with decoupled weight decay and a step learning-rate schedule."""
import bisect

import numpy as np

DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8
DEFAULT_WEIGHT_DECAY = 0.05


def adamw_step(parameter_set,
               lr,
               betas=DEFAULT_BETAS,
               eps=DEFAULT_EPS,
               weight_decay=DEFAULT_WEIGHT_DECAY):
    """Applies one AdamW update using the gradients stored in
    |parameter_set|. Tensors with decay=False (biases, layer norm) are not
    decayed."""
    beta1, beta2 = betas
    parameter_set.step_count += 1
    step = parameter_set.step_count
    first_correction = 1.0 - beta1**step
    second_correction = 1.0 - beta2**step
    for name, tensor in parameter_set:
        first = parameter_set.first_moments[name]
        second = parameter_set.second_moments[name]
        first *= beta1
        first += (1.0 - beta1) * tensor.grad
        second *= beta2
        second += (1.0 - beta2) * tensor.grad**2
        if tensor.decay and weight_decay:
            tensor.value -= lr * weight_decay * tensor.value
        tensor.value -= lr * (first / first_correction) / (
            np.sqrt(second / second_correction) + eps)


class StepSchedule:
    """Divides the base learning rate by 1/|gamma| at each milestone epoch."""

    def __init__(self, base_lr, milestones=(10, 20), gamma=0.1):
        self.base_lr = base_lr
        self.milestones = sorted(milestones)
        self.gamma = gamma

    def lr(self, epoch):
        """Learning rate for zero-based |epoch|."""
        return self.base_lr * self.gamma**bisect.bisect_right(
            self.milestones, epoch)


class AdamW:
    """Holds AdamW hyperparameters for one ParameterSet."""

    def __init__(self,
                 parameter_set,
                 lr,
                 betas=DEFAULT_BETAS,
                 eps=DEFAULT_EPS,
                 weight_decay=DEFAULT_WEIGHT_DECAY):
        self.parameter_set = parameter_set
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self, lr=None):
        """Updates parameters and leaves gradients untouched."""
        adamw_step(self.parameter_set, self.lr if lr is None else lr,
                   self.betas, self.eps, self.weight_decay)

    def zero_grad(self):
        """Resets gradients."""
        self.parameter_set.zero_grad()
