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
"""Dense building blocks with hand-written backward passes.

Every module follows the same protocol: forward(...) returns (output, cache)
and backward(d_output, cache) accumulates parameter gradients into the
module's tensors and returns the gradient with respect to the input. Keeping
the cache outside the module lets one module be applied several times in a
single forward pass.
"""
import collections
import math

import numpy as np

from tinynn import tensor as tensor_lib

LAYER_NORM_EPS = 1e-5
_GELU_SCALE = math.sqrt(2.0 / math.pi)
_GELU_CUBIC = 0.044715


class Module:
    """Base class holding tensors and child modules."""

    def __init__(self, dtype=np.float64):
        self.dtype = dtype
        self._tensors = collections.OrderedDict()
        self._modules = collections.OrderedDict()

    def add_tensor(self, name, value, decay=True):
        """Registers a trainable tensor."""
        tensor = tensor_lib.Tensor(np.asarray(value, dtype=self.dtype), decay)
        self._tensors[name] = tensor
        return tensor

    def add_module(self, name, module):
        """Registers a child module."""
        self._modules[name] = module
        return module

    def named_parameters(self, prefix=''):
        """Yields (dotted name, Tensor) for this module and its children."""
        for name, tensor in self._tensors.items():
            yield prefix + name, tensor
        for name, module in self._modules.items():
            yield from module.named_parameters(prefix + name + '.')

    def parameter_set(self):
        """Returns a ParameterSet over every tensor."""
        return tensor_lib.ParameterSet(self.named_parameters())


def uniform_fan_in(rng, fan_in, shape):
    """Samples U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """y = x W + b over the last axis."""

    def __init__(self, in_dim, out_dim, rng, dtype=np.float64, zero_init=False):
        super().__init__(dtype)
        self.in_dim = in_dim
        self.out_dim = out_dim
        if zero_init:
            weight = np.zeros((in_dim, out_dim))
        else:
            weight = uniform_fan_in(rng, in_dim, (in_dim, out_dim))
        self.weight = self.add_tensor('weight', weight)
        self.bias = self.add_tensor('bias', np.zeros(out_dim), decay=False)

    def forward(self, inputs):
        """Returns (x W + b, cache)."""
        tensor_lib.check_last_dim(inputs, self.in_dim, 'Linear')
        inputs = np.asarray(inputs, dtype=self.dtype)
        outputs = inputs @ self.weight.value + self.bias.value
        return tensor_lib.check_finite(outputs, 'Linear'), inputs

    def backward(self, d_outputs, cache):
        """Accumulates weight and bias gradients; returns d inputs."""
        inputs = cache
        flat_inputs = inputs.reshape(-1, self.in_dim)
        flat_d_outputs = d_outputs.reshape(-1, self.out_dim)
        self.weight.grad += flat_inputs.T @ flat_d_outputs
        self.bias.grad += flat_d_outputs.sum(axis=0)
        return d_outputs @ self.weight.value.T


def layer_norm(inputs, eps=LAYER_NORM_EPS):
    """Normalizes the last axis to zero mean and unit variance (no affine
    part). Returns (normalized, inverse standard deviation)."""
    centered = inputs - inputs.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    return centered * inv_std, inv_std


class LayerNorm(Module):
    """Layer normalization with learned gain and bias."""

    def __init__(self, dim, dtype=np.float64, eps=LAYER_NORM_EPS):
        super().__init__(dtype)
        self.dim = dim
        self.eps = eps
        self.gain = self.add_tensor('gain', np.ones(dim), decay=False)
        self.bias = self.add_tensor('bias', np.zeros(dim), decay=False)

    def forward(self, inputs):
        """Returns (gain * normalized + bias, cache)."""
        tensor_lib.check_last_dim(inputs, self.dim, 'LayerNorm')
        normalized, inv_std = layer_norm(np.asarray(inputs, dtype=self.dtype),
                                         self.eps)
        outputs = normalized * self.gain.value + self.bias.value
        return tensor_lib.check_finite(outputs,
                                       'LayerNorm'), (normalized, inv_std)

    def backward(self, d_outputs, cache):
        """Accumulates gain and bias gradients; returns d inputs."""
        normalized, inv_std = cache
        flat_d_outputs = d_outputs.reshape(-1, self.dim)
        self.gain.grad += (flat_d_outputs *
                           normalized.reshape(-1, self.dim)).sum(axis=0)
        self.bias.grad += flat_d_outputs.sum(axis=0)
        d_normalized = d_outputs * self.gain.value
        return inv_std * (d_normalized -
                          d_normalized.mean(axis=-1, keepdims=True) -
                          normalized *
                          (d_normalized * normalized).mean(axis=-1,
                                                           keepdims=True))


def softmax(inputs, axis=-1):
    """Numerically stable softmax. Entries equal to -inf get probability 0."""
    shifted = inputs - np.max(inputs, axis=axis, keepdims=True)
    exponentials = np.exp(shifted)
    return exponentials / exponentials.sum(axis=axis, keepdims=True)


def softmax_backward(d_outputs, outputs, axis=-1):
    """Gradient of softmax given its |outputs|."""
    return outputs * (d_outputs -
                      (d_outputs * outputs).sum(axis=axis, keepdims=True))


def gelu(inputs):
    """Tanh approximation of GELU. Returns (output, cache)."""
    inner = _GELU_SCALE * (inputs + _GELU_CUBIC * inputs**3)
    tanh = np.tanh(inner)
    return 0.5 * inputs * (1.0 + tanh), (inputs, tanh)


def gelu_backward(d_outputs, cache):
    """Gradient of gelu."""
    inputs, tanh = cache
    d_inner = _GELU_SCALE * (1.0 + 3.0 * _GELU_CUBIC * inputs**2)
    return d_outputs * (0.5 * (1.0 + tanh) + 0.5 * inputs *
                        (1.0 - tanh**2) * d_inner)


class MLP(Module):
    """Two linear layers with a GELU in between."""

    def __init__(self,
                 in_dim,
                 hidden_dim,
                 out_dim,
                 rng,
                 dtype=np.float64,
                 zero_init_output=False):
        super().__init__(dtype)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden = self.add_module('hidden',
                                      Linear(in_dim, hidden_dim, rng, dtype))
        self.output = self.add_module(
            'output',
            Linear(hidden_dim, out_dim, rng, dtype, zero_init=zero_init_output))

    def forward(self, inputs):
        """Returns (MLP(inputs), cache)."""
        hidden, hidden_cache = self.hidden.forward(inputs)
        activated, gelu_cache = gelu(hidden)
        outputs, output_cache = self.output.forward(activated)
        return outputs, (hidden_cache, gelu_cache, output_cache)

    def backward(self, d_outputs, cache):
        """Backpropagates through both layers; returns d inputs."""
        hidden_cache, gelu_cache, output_cache = cache
        d_activated = self.output.backward(d_outputs, output_cache)
        d_hidden = gelu_backward(d_activated, gelu_cache)
        return self.hidden.backward(d_hidden, hidden_cache)


class PositionalMLP(MLP):
    """Learnable positional embedding of K x 3 coordinates: 3 -> hidden ->
    dim. Coordinates are expected to be normalized by the caller."""

    def __init__(self, dim, rng, hidden_dim=128, dtype=np.float64,
                 zero_init_output=False):
        super().__init__(3, hidden_dim, dim, rng, dtype, zero_init_output)

    def forward(self, inputs):
        if np.ndim(inputs) != 2:
            raise tensor_lib.ShapeMismatchError(
                'PositionalMLP expects K x 3 coordinates, got shape %s.' %
                (np.shape(inputs),))
        return super().forward(inputs)


class Embedding(Module):
    """Lookup table of |num_embeddings| rows of width |dim|."""

    def __init__(self, num_embeddings, dim, rng, dtype=np.float64):
        super().__init__(dtype)
        self.num_embeddings = num_embeddings
        self.table = self.add_tensor(
            'table', rng.normal(0.0, 1.0 / math.sqrt(dim),
                                size=(num_embeddings, dim)))

    def forward(self, ids):
        """Returns (rows of |ids|, cache)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_embeddings):
            raise tensor_lib.ShapeMismatchError('Embedding id out of range.')
        return self.table.value[ids], ids

    def backward(self, d_outputs, cache):
        """Scatters |d_outputs| into the table gradient. Ids have no
        gradient."""
        np.add.at(self.table.grad, cache, d_outputs)
