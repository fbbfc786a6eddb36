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
"""Tests for attention.py."""
import numpy as np
import pytest

from tinynn import attention
from tinynn import gradcheck
from tinynn import tensor

DIM = 8
HEADS = 2


@pytest.fixture
def rng():
    """Returns a seeded generator."""
    return np.random.default_rng(1)


def test_heads_must_divide_dim(rng):
    """Tests that the model dim must split evenly across heads."""
    with pytest.raises(tensor.ShapeMismatchError):
        attention.MultiHeadAttention(10, 3, rng)


def test_single_key_returns_value_projection(rng):
    """Tests that one key gives every query its projected value."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    key = rng.normal(size=(1, DIM))
    outputs, _ = mha.forward(rng.normal(size=(5, DIM)), key)
    value, _ = mha.value.forward(key)
    expected, _ = mha.output.forward(value)
    assert np.allclose(outputs, np.tile(expected, (5, 1)))


def test_fully_masked_keys_use_null_value(rng):
    """Tests that fully masked keys fall back to the null value."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    outputs, _ = mha.forward(rng.normal(size=(3, DIM)),
                             rng.normal(size=(4, DIM)),
                             np.zeros(4, dtype=bool))
    expected, _ = mha.output.forward(mha.null_value.value[None, :])
    assert np.all(np.isfinite(outputs))
    assert np.allclose(outputs, np.tile(expected, (3, 1)))


def test_attention_rows_sum_to_one(rng):
    """Tests that weights sum to 1 over unmasked keys and vanish on masked
    keys."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    mask = np.array([True, False, True, True, False])
    _, cache = mha.forward(rng.normal(size=(4, DIM)),
                           rng.normal(size=(5, DIM)), mask)
    weights = cache['weights']
    assert np.allclose(weights.sum(axis=-1), 1.0, atol=1e-6)
    assert np.all(weights[:, :, ~mask] == 0.0)


def test_mask_shape_mismatch(rng):
    """Tests that a mask of the wrong length is rejected."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    with pytest.raises(tensor.ShapeMismatchError):
        mha.forward(np.zeros((2, DIM)), np.zeros((3, DIM)), np.ones(2, bool))


def test_deterministic_forward(rng):
    """Tests that equal inputs give equal outputs."""
    layer = attention.TransformerLayer(DIM, HEADS, rng)
    tokens = rng.normal(size=(6, DIM))
    context = rng.normal(size=(3, DIM))
    first, _ = layer.forward(tokens, None, context, None)
    second, _ = layer.forward(tokens, None, context, None)
    assert np.array_equal(first, second)


def test_attention_grad_check(rng):
    """Tests multi-head attention with a partial key mask."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    mask = np.array([True, True, False, True])
    report = gradcheck.check_module(
        mha, (rng.normal(size=(3, DIM)), rng.normal(size=(4, DIM)), mask),
        differentiable=(True, True, False))
    assert report.passed, report.errors


def test_null_attention_grad_check(rng):
    """Tests the fully masked path against finite differences."""
    mha = attention.MultiHeadAttention(DIM, HEADS, rng)
    report = gradcheck.check_module(
        mha, (rng.normal(size=(3, DIM)), rng.normal(size=(2, DIM)),
              np.zeros(2, dtype=bool)),
        differentiable=(True, True, False))
    assert report.passed, report.errors


def test_self_attention_block_grad_check(rng):
    """Tests the pre-norm self-attention block with padded rows."""
    block = attention.AttentionBlock(DIM, HEADS, rng, self_attention=True)
    mask = np.array([True, True, True, False, False])
    report = gradcheck.check_module(block,
                                    (rng.normal(size=(5, DIM)), mask),
                                    differentiable=(True, False))
    assert report.passed, report.errors


def test_transformer_layer_grad_check(rng):
    """Tests self, cross and feed-forward blocks together."""
    layer = attention.TransformerLayer(DIM, HEADS, rng)
    report = gradcheck.check_module(
        layer, (rng.normal(size=(4, DIM)), np.array([True, True, True, False]),
                rng.normal(size=(3, DIM)), np.array([True, False, True])),
        differentiable=(True, False, True, False))
    assert report.passed, report.errors


def test_padded_rows_stay_zero(rng):
    """Tests that padded query rows are zero after a stack."""
    stack = attention.TransformerStack(DIM, HEADS, 2, rng)
    mask = np.array([True, False, True])
    outputs, _ = stack.forward(rng.normal(size=(3, DIM)), mask,
                               rng.normal(size=(2, DIM)), None)
    assert np.all(outputs[1] == 0.0)
