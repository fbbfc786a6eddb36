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
"""Parameter tensors and named parameter sets."""
import collections

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when array shapes are incompatible."""


class NonFiniteError(ArithmeticError):
    """Raised when a forward pass produces NaN or Inf."""


def check_finite(array, where):
    """Raises NonFiniteError if |array| has NaN or Inf entries."""
    if not np.all(np.isfinite(array)):
        raise NonFiniteError('Non-finite values in %s.' % where)
    return array


def check_last_dim(array, size, where):
    """Raises ShapeMismatchError unless the last axis of |array| has |size|
    entries."""
    if np.ndim(array) < 1 or np.shape(array)[-1] != size:
        raise ShapeMismatchError('%s expects last dimension %d, got shape %s.' %
                                 (where, size, np.shape(array)))


class Tensor:
    """A trainable array with a gradient buffer of the same shape. |decay|
    is False for parameters exempt from weight decay (biases, layer norm)."""

    def __init__(self, value, decay=True):
        self.value = np.asarray(value)
        self.grad = np.zeros_like(self.value)
        self.decay = decay

    @property
    def shape(self):
        """Shape of the value (and the gradient)."""
        return self.value.shape

    def zero_grad(self):
        """Resets the gradient buffer."""
        self.grad[...] = 0


class ParameterSet:
    """Named tensors in a fixed order, plus the AdamW moments of each."""

    def __init__(self, named_tensors):
        self._tensors = collections.OrderedDict()
        for name, tensor in named_tensors:
            if name in self._tensors:
                raise ValueError('Duplicate parameter name: %s.' % name)
            self._tensors[name] = tensor
        self.first_moments = {
            name: np.zeros_like(tensor.value)
            for name, tensor in self._tensors.items()
        }
        self.second_moments = {
            name: np.zeros_like(tensor.value)
            for name, tensor in self._tensors.items()
        }
        self.step_count = 0

    def __len__(self):
        return len(self._tensors)

    def __iter__(self):
        return iter(self._tensors.items())

    def __getitem__(self, name):
        return self._tensors[name]

    def __contains__(self, name):
        return name in self._tensors

    def names(self):
        """Parameter names in iteration order."""
        return list(self._tensors)

    def zero_grad(self):
        """Resets every gradient buffer."""
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def scale_grad(self, factor):
        """Multiplies every gradient by |factor|."""
        for tensor in self._tensors.values():
            tensor.grad *= factor

    def num_values(self):
        """Total number of scalar parameters."""
        return sum(tensor.value.size for tensor in self._tensors.values())
