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
"""The situated question answering network.

Visual tokens (BEV features plus a 3D positional embedding) attend to the
situation text in a fusion stack. A per-token head then estimates the
situation. Visual tokens get a positional embedding of their coordinates in
the estimated situation's frame and are re-encoded before a shallow decoder
reads out answer logits from a CLS query over the question.
"""
import collections

import numpy as np

from geometry import frames
from geometry import rotations
from model import text
from situation import targets
from tinynn import attention
from tinynn import layers
from tokenization import voxelize

ModelConfig = collections.namedtuple('ModelConfig', [
    'dim',
    'heads',
    'fusion_layers',
    'reencode_layers',
    'answer_layers',
    'pe_hidden',
    'text_length',
    'feature_channels',
    'use_3d_pe',
    'use_situational_pe',
    'use_reencode',
    'rotation_repr',
    'situated_scale',
])

DEFAULT_MODEL_CONFIG = ModelConfig(dim=64,
                                   heads=4,
                                   fusion_layers=2,
                                   reencode_layers=2,
                                   answer_layers=1,
                                   pe_hidden=128,
                                   text_length=text.DEFAULT_TEXT_LENGTH,
                                   feature_channels=voxelize.feature_channels(),
                                   use_3d_pe=True,
                                   use_situational_pe=True,
                                   use_reencode=True,
                                   rotation_repr='6d',
                                   situated_scale=5.0)

# Normalized position (3) followed by a 6D rotation.
POSE_VECTOR_SIZE = 9

# One episode as the network sees it. |situation| and |answer| are the ground
# truth and may be None at inference.
ModelInputs = collections.namedtuple(
    'ModelInputs',
    ['tokens', 'situation_ids', 'question_ids', 'situation', 'answer'])

# How a pipeline variant wires the network.
#   situation_text: feed the situation description (else empty text).
#   gt_token: append a token embedding the ground-truth pose to the text.
#   estimator: 'anchors' (per-token head) or 'regression' (pooled MLP).
ModePlan = collections.namedtuple('ModePlan',
                                  ['situation_text', 'gt_token', 'estimator'])

FULL_PLAN = ModePlan(situation_text=True, gt_token=False, estimator='anchors')

Forward = collections.namedtuple('Forward', [
    'token_predictions', 'pose_vector', 'estimate', 'pe_situation', 'logits',
    'fused', 'reencoded', 'caches'
])


class EmptyQuestionError(ValueError):
    """Raised when a question has no tokens."""


def pose_to_vector(situation, bounds):
    """Encodes |situation| as [bounds-normalized position, 6D rotation]."""
    return np.concatenate([
        voxelize.normalize_coordinates(situation.position, bounds),
        situation.to_rot6d()
    ])


def vector_to_pose(vector, bounds):
    """Inverse of pose_to_vector. The rotation is projected to a heading."""
    low, high = np.asarray(bounds[0]), np.asarray(bounds[1])
    extent = np.where(high - low > 1e-9, high - low, 1.0)
    position = low + (np.asarray(vector[:3]) + 1.0) * extent / 2.0
    return frames.SituationVector.from_matrix(
        position, rotations.rot6d_to_matrix(vector[3:POSE_VECTOR_SIZE]))


class SituNet(layers.Module):
    """Situation estimation and situation-guided question answering."""

    def __init__(self, config, vocab_size, num_answers, seed=0):
        super().__init__(np.float64)
        self.config = config
        self.num_answers = num_answers
        rng = np.random.default_rng(seed)
        dim = config.dim

        self.text = self.add_module(
            'text', text.TextEncoder(vocab_size, dim, rng, config.text_length))
        self.visual_projection = self.add_module(
            'visual_projection', layers.Linear(config.feature_channels, dim,
                                               rng))
        self.visual_pe = self.add_module(
            'visual_pe', layers.PositionalMLP(dim, rng, config.pe_hidden))
        self.fusion = self.add_module(
            'fusion',
            attention.TransformerStack(dim, config.heads, config.fusion_layers,
                                       rng))
        self.situation_head = self.add_module(
            'situation_head',
            layers.MLP(dim, dim, targets.head_channels(config.rotation_repr),
                       rng))
        self.regression_head = self.add_module(
            'regression_head', layers.MLP(dim, dim, POSE_VECTOR_SIZE, rng))
        self.pose_token = self.add_module(
            'pose_token', layers.MLP(POSE_VECTOR_SIZE, dim, dim, rng))
        self.situational_pe_mlp = self.add_module(
            'situational_pe', layers.PositionalMLP(dim, rng, config.pe_hidden))
        self.reencoder = self.add_module(
            'reencoder',
            attention.TransformerStack(dim, config.heads,
                                       config.reencode_layers, rng))
        self.cls = self.add_tensor('cls', rng.normal(0.0, dim**-0.5, size=dim))
        self.decoder = self.add_module(
            'decoder',
            attention.TransformerStack(dim, config.heads, config.answer_layers,
                                       rng))
        self.answer_head = self.add_module(
            'answer_head', layers.MLP(dim, dim, num_answers, rng))

    def encode_text(self, ids, role):
        """Returns (TextTokens, cache) for token |ids|."""
        return self.text.forward(ids, role)

    def embed_visual(self, tokens):
        """Projects token features and adds the 3D positional embedding."""
        mask = tokens.mask
        embedded, projection_cache = self.visual_projection.forward(
            tokens.features)
        pe_cache = None
        if self.config.use_3d_pe:
            pe, pe_cache = self.visual_pe.forward(tokens.normalized_anchors())
            embedded = embedded + pe
        return embedded * mask[:, None], (projection_cache, pe_cache, mask)

    def _embed_visual_backward(self, d_embedded, cache):
        projection_cache, pe_cache, mask = cache
        d_embedded = d_embedded * mask[:, None]
        if pe_cache is not None:
            self.visual_pe.backward(d_embedded, pe_cache)
        self.visual_projection.backward(d_embedded, projection_cache)

    def embed_pose(self, situation, bounds):
        """Returns (1 x D token of the pose, cache)."""
        return self.pose_token.forward(pose_to_vector(situation, bounds)[None,
                                                                         :])

    def fuse(self, visual, mask, context, context_mask):
        """Visual tokens attend to themselves and to the situation text."""
        return self.fusion.forward(visual, mask, context, context_mask)

    def estimate_situation(self, fused, tokens):
        """Returns (per-token predictions, decoded SituationVector, cache)."""
        predictions, cache = self.situation_head.forward(fused)
        estimate = targets.decode_situation(predictions, tokens.anchors,
                                            tokens.mask,
                                            self.config.rotation_repr)
        return predictions, estimate, cache

    def realigned_coordinates(self, anchors, mask, situation):
        """Anchors in the frame of |situation|, divided by the situated scale.
        Padding anchors are zero."""
        coordinates = frames.realign_frame(anchors, situation)
        return coordinates / self.config.situated_scale * mask[:, None]

    def situational_pe(self, anchors, mask, situation):
        """Returns (N x D situation-guided embedding, cache)."""
        coordinates = self.realigned_coordinates(anchors, mask, situation)
        pe, cache = self.situational_pe_mlp.forward(coordinates)
        return pe * mask[:, None], (cache, mask)

    def reencode(self, fused, mask, anchors, situation, context, context_mask):
        """Adds the situational embedding and re-encodes the visual tokens
        against the situation text."""
        tokens = fused
        pe_cache = stack_cache = None
        if self.config.use_situational_pe:
            pe, pe_cache = self.situational_pe(anchors, mask, situation)
            tokens = tokens + pe
        if self.config.use_reencode:
            tokens, stack_cache = self.reencoder.forward(
                tokens, mask, context, context_mask)
        return tokens, (pe_cache, stack_cache)

    def _reencode_backward(self, d_tokens, cache):
        pe_cache, stack_cache = cache
        d_context = None
        if stack_cache is not None:
            d_tokens, d_context = self.reencoder.backward(
                d_tokens, stack_cache)
        if pe_cache is not None:
            mlp_cache, mask = pe_cache
            self.situational_pe_mlp.backward(d_tokens * mask[:, None],
                                             mlp_cache)
        return d_tokens, d_context

    def answer(self, reencoded, mask, question, context, context_mask):
        """Returns (answer logits, cache). A CLS query is prepended to the
        question; the decoder attends to visual and situation tokens."""
        if not question.mask.any():
            raise EmptyQuestionError('Question has no tokens.')
        queries = np.concatenate([self.cls.value[None, :], question.embedded])
        query_mask = np.concatenate([[True], question.mask])
        memory = np.concatenate([reencoded, context])
        memory_mask = np.concatenate([mask, context_mask])
        decoded, decoder_cache = self.decoder.forward(queries, query_mask,
                                                      memory, memory_mask)
        logits, head_cache = self.answer_head.forward(decoded[0])
        return logits, (decoder_cache, head_cache, len(reencoded),
                        decoded.shape)

    def _answer_backward(self, d_logits, cache):
        decoder_cache, head_cache, num_visual, decoded_shape = cache
        d_decoded = np.zeros(decoded_shape)
        d_decoded[0] = self.answer_head.backward(d_logits, head_cache)
        d_queries, d_memory = self.decoder.backward(d_decoded, decoder_cache)
        self.cls.grad += d_queries[0]
        return d_memory[:num_visual], d_queries[1:], d_memory[num_visual:]

    def direct_regression(self, fused, mask, bounds):
        """Regresses one pose from the masked mean of the fused tokens.
        Returns (pose vector, SituationVector, cache)."""
        count = int(mask.sum())
        if not count:
            raise targets.NoRealTokensError('All tokens are padding.')
        pooled = (fused * mask[:, None]).sum(axis=0) / count
        vector, head_cache = self.regression_head.forward(pooled)
        return vector, vector_to_pose(vector, bounds), (head_cache, mask,
                                                        count)

    def _direct_regression_backward(self, d_vector, cache):
        head_cache, mask, count = cache
        d_pooled = self.regression_head.backward(d_vector, head_cache)
        return np.outer(mask / count, d_pooled)

    def forward(self, inputs, plan=FULL_PLAN, pe_situation=None):
        """Runs the network on one episode.

        The situational embedding uses |pe_situation| when given (ground
        truth or teacher forcing) and the network's own estimate otherwise."""
        tokens = inputs.tokens
        mask = tokens.mask
        caches = {}

        situation_ids = inputs.situation_ids if plan.situation_text else []
        situation_text, caches['situation_text'] = self.encode_text(
            situation_ids, 'situation')
        context, context_mask = situation_text.embedded, situation_text.mask
        if plan.gt_token:
            pose, caches['pose_token'] = self.embed_pose(
                inputs.situation, tokens.bounds)
            context = np.concatenate([context, pose])
            context_mask = np.append(context_mask, True)

        visual, caches['visual'] = self.embed_visual(tokens)
        fused, caches['fusion'] = self.fuse(visual, mask, context,
                                            context_mask)

        token_predictions = pose_vector = None
        if plan.estimator == 'anchors':
            token_predictions, estimate, caches['head'] = (
                self.estimate_situation(fused, tokens))
        else:
            pose_vector, estimate, caches['regression'] = (
                self.direct_regression(fused, mask, tokens.bounds))

        if pe_situation is None:
            pe_situation = estimate
        reencoded, caches['reencode'] = self.reencode(fused, mask,
                                                      tokens.anchors,
                                                      pe_situation, context,
                                                      context_mask)
        question, caches['question'] = self.encode_text(
            inputs.question_ids, 'question')
        logits, caches['answer'] = self.answer(reencoded, mask, question,
                                               context, context_mask)
        caches['plan'] = plan
        return Forward(token_predictions, pose_vector, estimate, pe_situation,
                       logits, fused, reencoded, caches)

    def backward(self,
                 forward,
                 d_token_predictions=None,
                 d_pose_vector=None,
                 d_logits=None):
        """Accumulates parameter gradients for the given output gradients.
        Outputs without a gradient are skipped."""
        caches = forward.caches
        d_context = None
        d_fused = np.zeros_like(forward.fused)

        def add_context(gradient):
            nonlocal d_context
            if gradient is not None:
                d_context = gradient if d_context is None else (d_context +
                                                                gradient)

        if d_logits is not None:
            d_reencoded, d_question, d_answer_context = self._answer_backward(
                d_logits, caches['answer'])
            self.text.backward(d_question, caches['question'])
            add_context(d_answer_context)
            d_reencode_input, d_reencode_context = self._reencode_backward(
                d_reencoded, caches['reencode'])
            d_fused += d_reencode_input
            add_context(d_reencode_context)
        if d_token_predictions is not None:
            d_fused += self.situation_head.backward(d_token_predictions,
                                                    caches['head'])
        if d_pose_vector is not None:
            d_fused += self._direct_regression_backward(
                d_pose_vector, caches['regression'])

        d_visual, d_fusion_context = self.fusion.backward(
            d_fused, caches['fusion'])
        add_context(d_fusion_context)
        self._embed_visual_backward(d_visual, caches['visual'])

        if d_context is None:
            return
        if caches['plan'].gt_token:
            self.pose_token.backward(d_context[-1:], caches['pose_token'])
            d_context = d_context[:-1]
        self.text.backward(d_context, caches['situation_text'])
