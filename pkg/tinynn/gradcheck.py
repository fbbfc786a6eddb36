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
"""Finite-difference gradient checking."""
import collections

import numpy as np

from tinynn import tensor as tensor_lib

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-4
DEFAULT_MAX_ENTRIES = 20
ERROR_FLOOR = 1e-3

GradCheckReport = collections.namedtuple(
    'GradCheckReport', ['errors', 'max_error', 'tolerance', 'passed'])


def relative_error(analytic, numeric, floor=ERROR_FLOOR):
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    return np.abs(analytic - numeric) / np.maximum(
        np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def _sample_entries(size, max_entries, rng):
    if max_entries is None or size <= max_entries:
        return np.arange(size)
    return np.sort(rng.choice(size, max_entries, replace=False))


def numeric_gradient(loss_fn, array, step=DEFAULT_STEP, entries=None):
    """Central differences of loss_fn(array) with respect to |array|, which
    is perturbed in place and restored. Entries outside |entries| are 0."""
    gradient = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    entries = np.arange(flat.size) if entries is None else entries
    for index in entries:
        original = flat[index]
        flat[index] = original + step
        plus = loss_fn(array)
        flat[index] = original - step
        minus = loss_fn(array)
        flat[index] = original
        gradient.reshape(-1)[index] = (plus - minus) / (2.0 * step)
    return gradient


def grad_check(loss_fn,
               parameter_set,
               tolerance=DEFAULT_TOLERANCE,
               step=DEFAULT_STEP,
               max_entries=DEFAULT_MAX_ENTRIES,
               seed=0):
    """Compares analytic and numeric gradients of every tensor.

    loss_fn(backward) evaluates the scalar loss from the current tensor
    values, and with backward=True also accumulates gradients into the
    tensors. Returns a GradCheckReport with the max relative error per
    tensor."""
    for name, tensor in parameter_set:
        if tensor.value.dtype != np.float64:
            raise ValueError('Gradient checks need float64; %s is %s.' %
                             (name, tensor.value.dtype))
    parameter_set.zero_grad()
    loss_fn(True)
    analytic = {name: tensor.grad.copy() for name, tensor in parameter_set}

    rng = np.random.default_rng(seed)
    errors = collections.OrderedDict()
    for name, tensor in parameter_set:
        entries = _sample_entries(tensor.value.size, max_entries, rng)
        if not len(entries):
            continue
        numeric = numeric_gradient(lambda _: loss_fn(False), tensor.value,
                                   step, entries)
        errors[name] = float(
            relative_error(analytic[name].reshape(-1)[entries],
                           numeric.reshape(-1)[entries]).max())
    max_error = max(errors.values()) if errors else 0.0
    return GradCheckReport(errors, max_error, tolerance, max_error < tolerance)


def check_module(module,
                 inputs,
                 differentiable=None,
                 tolerance=DEFAULT_TOLERANCE,
                 max_entries=DEFAULT_MAX_ENTRIES,
                 seed=0):
    """Gradient-checks module.forward(*inputs) under a fixed random linear
    loss. Float inputs flagged in |differentiable| are checked too, under the
    names input0, input1, ...; module.backward must return their gradients
    in the same order."""
    if differentiable is None:
        differentiable = [True] * len(inputs)
    input_tensors = [
        (index, tensor_lib.Tensor(np.array(value, dtype=np.float64)))
        for index, (value, flag) in enumerate(zip(inputs, differentiable))
        if flag
    ]
    live_inputs = list(inputs)
    for index, input_tensor in input_tensors:
        live_inputs[index] = input_tensor.value

    outputs, _ = module.forward(*live_inputs)
    projection = np.random.default_rng(seed).normal(size=outputs.shape)

    def loss_fn(backward):
        outputs, cache = module.forward(*live_inputs)
        if backward:
            d_inputs = module.backward(projection, cache)
            if not isinstance(d_inputs, tuple):
                d_inputs = (d_inputs,)
            for (_, input_tensor), d_input in zip(input_tensors, d_inputs):
                input_tensor.grad += d_input
        return float((outputs * projection).sum())

    parameter_set = tensor_lib.ParameterSet(
        list(module.named_parameters()) +
        [('input%d' % index, tensor) for index, tensor in input_tensors])
    return grad_check(loss_fn, parameter_set, tolerance,
                      max_entries=max_entries, seed=seed)
