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
"""Tests for layers.py and tensor.py."""
import numpy as np
import pytest
from scipy.spatial import distance

from tinynn import gradcheck
from tinynn import layers
from tinynn import tensor


@pytest.fixture
def rng():
    """Returns a seeded generator."""
    return np.random.default_rng(0)


def test_softmax_of_zeros():
    """Tests that softmax of (0, 0) is uniform."""
    assert np.allclose(layers.softmax(np.zeros(2)), [0.5, 0.5])


def test_softmax_ignores_minus_infinity():
    """Tests that -inf entries get zero probability."""
    assert np.allclose(layers.softmax(np.array([0.0, -np.inf, 0.0])),
                       [0.5, 0.0, 0.5])


def test_layer_norm_of_constant_vector():
    """Tests that a constant vector normalizes to zeros."""
    normalized, _ = layers.layer_norm(np.full((2, 8), 3.7))
    assert np.allclose(normalized, 0.0, atol=1e-6)


def test_linear_shape_mismatch(rng):
    """Tests that a wrong input width is rejected."""
    linear = layers.Linear(4, 3, rng)
    with pytest.raises(tensor.ShapeMismatchError):
        linear.forward(np.zeros((2, 5)))


def test_linear_non_finite(rng):
    """Tests that NaN inputs trip NonFiniteError."""
    linear = layers.Linear(2, 2, rng)
    with pytest.raises(tensor.NonFiniteError):
        linear.forward(np.array([[np.nan, 0.0]]))


def test_linear_grad_check(rng):
    """Tests the linear layer against finite differences."""
    report = gradcheck.check_module(layers.Linear(5, 3, rng),
                                    (rng.normal(size=(4, 5)),))
    assert report.passed, report.errors


def test_layer_norm_grad_check(rng):
    """Tests layer norm against finite differences."""
    norm = layers.LayerNorm(6)
    norm.gain.value[...] = rng.normal(size=6)
    norm.bias.value[...] = rng.normal(size=6)
    report = gradcheck.check_module(norm, (rng.normal(size=(3, 6)),))
    assert report.passed, report.errors


def test_mlp_grad_check(rng):
    """Tests the GELU MLP against finite differences."""
    report = gradcheck.check_module(layers.MLP(4, 8, 3, rng),
                                    (rng.normal(size=(5, 4)),))
    assert report.passed, report.errors


def test_positional_mlp_grad_check(rng):
    """Tests the positional MLP against finite differences."""
    report = gradcheck.check_module(layers.PositionalMLP(8, rng, hidden_dim=16),
                                    (rng.uniform(-1, 1, size=(6, 3)),))
    assert report.passed, report.errors


def test_positional_mlp_zero_init(rng):
    """Tests that a zero-initialized output layer embeds to zero."""
    pe = layers.PositionalMLP(8, rng, zero_init_output=True)
    embedding, _ = pe.forward(np.zeros((4, 3)))
    assert np.all(embedding == 0.0)


def test_positional_mlp_distinct_embeddings(rng):
    """Tests that distinct coordinates get distinct embeddings."""
    pe = layers.PositionalMLP(16, rng)
    coordinates = rng.uniform(-1, 1, size=(1000, 3))
    embeddings, _ = pe.forward(coordinates)
    assert distance.pdist(embeddings).min() > 1e-9


def test_positional_mlp_requires_matrix(rng):
    """Tests that a single coordinate vector is rejected."""
    with pytest.raises(tensor.ShapeMismatchError):
        layers.PositionalMLP(8, rng).forward(np.zeros(3))


def test_embedding_gradient_scatter(rng):
    """Tests that repeated ids accumulate their gradients."""
    embedding = layers.Embedding(5, 3, rng)
    rows, cache = embedding.forward([1, 1, 4])
    assert np.array_equal(rows[0], embedding.table.value[1])
    embedding.backward(np.ones((3, 3)), cache)
    assert np.array_equal(embedding.table.grad[1], [2.0, 2.0, 2.0])
    assert np.array_equal(embedding.table.grad[0], [0.0, 0.0, 0.0])


def test_embedding_rejects_out_of_range(rng):
    """Tests that ids outside the table are rejected."""
    with pytest.raises(tensor.ShapeMismatchError):
        layers.Embedding(5, 3, rng).forward([5])


def test_parameter_names_are_unique_and_ordered(rng):
    """Tests deterministic dotted names and duplicate detection."""
    mlp = layers.MLP(2, 3, 1, rng)
    assert mlp.parameter_set().names() == [
        'hidden.weight', 'hidden.bias', 'output.weight', 'output.bias'
    ]
    duplicate = [('w', tensor.Tensor(np.zeros(1)))] * 2
    with pytest.raises(ValueError):
        tensor.ParameterSet(duplicate)


def test_bias_and_norm_exempt_from_decay(rng):
    """Tests the decay flags of biases and layer norm parameters."""
    assert not layers.LayerNorm(3).gain.decay
    linear = layers.Linear(2, 2, rng)
    assert linear.weight.decay
    assert not linear.bias.decay
