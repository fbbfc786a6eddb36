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
"""Multi-head attention and pre-norm transformer blocks."""
import math

import numpy as np

from tinynn import layers
from tinynn import tensor as tensor_lib


class MultiHeadAttention(layers.Module):
    """Scaled dot-product attention of queries over (key, value) tokens.

    Masked keys get zero weight. When every key is masked, each query attends
    with weight 1 to a learned null value instead."""

    def __init__(self, dim, num_heads, rng, dtype=np.float64):
        super().__init__(dtype)
        if dim % num_heads:
            raise tensor_lib.ShapeMismatchError(
                'Model dim %d is not divisible by %d heads.' %
                (dim, num_heads))
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.query = self.add_module('query',
                                     layers.Linear(dim, dim, rng, dtype))
        self.key = self.add_module('key', layers.Linear(dim, dim, rng, dtype))
        self.value = self.add_module('value',
                                     layers.Linear(dim, dim, rng, dtype))
        self.output = self.add_module('output',
                                      layers.Linear(dim, dim, rng, dtype))
        self.null_value = self.add_tensor('null_value',
                                          rng.normal(0.0,
                                                     1.0 / math.sqrt(dim),
                                                     size=dim),
                                          decay=False)

    def _split(self, tokens):
        return tokens.reshape(len(tokens), self.num_heads,
                              self.head_dim).transpose(1, 0, 2)

    def _merge(self, heads):
        return heads.transpose(1, 0, 2).reshape(heads.shape[1], self.dim)

    def forward(self, queries, keys, mask=None):
        """Attends |queries| (Nq x D) over |keys| (Nk x D). Returns
        (Nq x D output, cache); cache['weights'] is H x Nq x Nk."""
        tensor_lib.check_last_dim(queries, self.dim, 'MultiHeadAttention')
        tensor_lib.check_last_dim(keys, self.dim, 'MultiHeadAttention')
        if mask is None:
            mask = np.ones(len(keys), dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (len(keys),):
            raise tensor_lib.ShapeMismatchError(
                'Key mask of shape %s for %d keys.' % (mask.shape, len(keys)))

        if not mask.any():
            context = np.tile(self.null_value.value, (len(queries), 1))
            outputs, output_cache = self.output.forward(context)
            return outputs, {
                'null': True,
                'output': output_cache,
                'num_keys': len(keys),
                'weights': np.zeros((self.num_heads, len(queries), len(keys)))
            }

        projected_queries, query_cache = self.query.forward(queries)
        projected_keys, key_cache = self.key.forward(keys)
        projected_values, value_cache = self.value.forward(keys)
        query_heads = self._split(projected_queries)
        key_heads = self._split(projected_keys)
        value_heads = self._split(projected_values)

        scale = 1.0 / math.sqrt(self.head_dim)
        scores = query_heads @ key_heads.transpose(0, 2, 1) * scale
        scores = np.where(mask[None, None, :], scores, -np.inf)
        weights = layers.softmax(scores)
        context = self._merge(weights @ value_heads)
        outputs, output_cache = self.output.forward(context)
        return tensor_lib.check_finite(outputs, 'MultiHeadAttention'), {
            'null': False,
            'query': query_cache,
            'key': key_cache,
            'value': value_cache,
            'output': output_cache,
            'heads': (query_heads, key_heads, value_heads),
            'weights': weights,
            'scale': scale,
        }

    def backward(self, d_outputs, cache):
        """Returns (d queries, d keys)."""
        d_context = self.output.backward(d_outputs, cache['output'])
        if cache['null']:
            self.null_value.grad += d_context.sum(axis=0)
            return (np.zeros_like(d_outputs),
                    np.zeros((cache['num_keys'], self.dim)))

        query_heads, key_heads, value_heads = cache['heads']
        weights = cache['weights']
        scale = cache['scale']
        d_context_heads = self._split(d_context)
        d_weights = d_context_heads @ value_heads.transpose(0, 2, 1)
        d_value_heads = weights.transpose(0, 2, 1) @ d_context_heads
        d_scores = layers.softmax_backward(d_weights, weights) * scale
        d_query_heads = d_scores @ key_heads
        d_key_heads = d_scores.transpose(0, 2, 1) @ query_heads

        d_queries = self.query.backward(self._merge(d_query_heads),
                                        cache['query'])
        d_keys = (self.key.backward(self._merge(d_key_heads), cache['key']) +
                  self.value.backward(self._merge(d_value_heads),
                                      cache['value']))
        return d_queries, d_keys


def _apply_row_mask(tokens, row_mask):
    if row_mask is None:
        return tokens
    return tokens * row_mask[:, None]


class AttentionBlock(layers.Module):
    """Pre-norm residual attention: x + MHA(LN(x), context).

    With |self_attention| the normalized tokens attend to themselves under
    their own mask; otherwise they attend to an external context."""

    def __init__(self, dim, num_heads, rng, self_attention, dtype=np.float64):
        super().__init__(dtype)
        self.self_attention = self_attention
        self.norm = self.add_module('norm', layers.LayerNorm(dim, dtype))
        self.attention = self.add_module(
            'attention', MultiHeadAttention(dim, num_heads, rng, dtype))

    def forward(self, tokens, mask=None, context=None, context_mask=None):
        """Returns (updated tokens, cache). Rows where |mask| is False are
        zeroed."""
        normalized, norm_cache = self.norm.forward(tokens)
        if self.self_attention:
            keys, key_mask = normalized, mask
        else:
            keys, key_mask = context, context_mask
        attended, attention_cache = self.attention.forward(
            normalized, keys, key_mask)
        outputs = _apply_row_mask(tokens + attended, mask)
        return outputs, (norm_cache, attention_cache, mask)

    def backward(self, d_outputs, cache):
        """Returns (d tokens, d context); d context is None for
        self-attention."""
        norm_cache, attention_cache, mask = cache
        d_outputs = _apply_row_mask(d_outputs, mask)
        d_normalized, d_keys = self.attention.backward(d_outputs,
                                                       attention_cache)
        if self.self_attention:
            d_normalized = d_normalized + d_keys
            d_keys = None
        return d_outputs + self.norm.backward(d_normalized, norm_cache), d_keys


class FeedForwardBlock(layers.Module):
    """Pre-norm residual MLP: x + MLP(LN(x)) with a 4x hidden width."""

    def __init__(self, dim, rng, hidden_multiplier=4, dtype=np.float64):
        super().__init__(dtype)
        self.norm = self.add_module('norm', layers.LayerNorm(dim, dtype))
        self.mlp = self.add_module(
            'mlp', layers.MLP(dim, hidden_multiplier * dim, dim, rng, dtype))

    def forward(self, tokens, mask=None):
        """Returns (updated tokens, cache)."""
        normalized, norm_cache = self.norm.forward(tokens)
        transformed, mlp_cache = self.mlp.forward(normalized)
        return _apply_row_mask(tokens + transformed,
                               mask), (norm_cache, mlp_cache, mask)

    def backward(self, d_outputs, cache):
        """Returns d tokens."""
        norm_cache, mlp_cache, mask = cache
        d_outputs = _apply_row_mask(d_outputs, mask)
        d_normalized = self.mlp.backward(d_outputs, mlp_cache)
        return d_outputs + self.norm.backward(d_normalized, norm_cache)


class TransformerLayer(layers.Module):
    """Self-attention, then optional cross-attention to a context, then a
    feed-forward block."""

    def __init__(self, dim, num_heads, rng, cross_attention=True,
                 dtype=np.float64):
        super().__init__(dtype)
        self.self_block = self.add_module(
            'self_attention',
            AttentionBlock(dim, num_heads, rng, True, dtype))
        self.cross_block = None
        if cross_attention:
            self.cross_block = self.add_module(
                'cross_attention',
                AttentionBlock(dim, num_heads, rng, False, dtype))
        self.feed_forward = self.add_module('feed_forward',
                                            FeedForwardBlock(dim, rng,
                                                             dtype=dtype))

    def forward(self, tokens, mask=None, context=None, context_mask=None):
        """Returns (updated tokens, cache)."""
        tokens, self_cache = self.self_block.forward(tokens, mask)
        cross_cache = None
        if self.cross_block is not None:
            tokens, cross_cache = self.cross_block.forward(
                tokens, mask, context, context_mask)
        tokens, feed_forward_cache = self.feed_forward.forward(tokens, mask)
        return tokens, (self_cache, cross_cache, feed_forward_cache)

    def backward(self, d_outputs, cache):
        """Returns (d tokens, d context or None)."""
        self_cache, cross_cache, feed_forward_cache = cache
        d_tokens = self.feed_forward.backward(d_outputs, feed_forward_cache)
        d_context = None
        if self.cross_block is not None:
            d_tokens, d_context = self.cross_block.backward(
                d_tokens, cross_cache)
        d_tokens, _ = self.self_block.backward(d_tokens, self_cache)
        return d_tokens, d_context


class TransformerStack(layers.Module):
    """A sequence of TransformerLayers sharing one context."""

    def __init__(self, dim, num_heads, num_layers, rng, cross_attention=True,
                 dtype=np.float64):
        super().__init__(dtype)
        self.layers = [
            self.add_module('layer%d' % index,
                            TransformerLayer(dim, num_heads, rng,
                                             cross_attention, dtype))
            for index in range(num_layers)
        ]

    def forward(self, tokens, mask=None, context=None, context_mask=None):
        """Returns (updated tokens, cache)."""
        caches = []
        for layer in self.layers:
            tokens, cache = layer.forward(tokens, mask, context, context_mask)
            caches.append(cache)
        return tokens, caches

    def backward(self, d_outputs, caches):
        """Returns (d tokens, summed d context or None)."""
        d_context_total = None
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            d_outputs, d_context = layer.backward(d_outputs, cache)
            if d_context is not None:
                d_context_total = (d_context if d_context_total is None else
                                   d_context_total + d_context)
        return d_outputs, d_context_total
