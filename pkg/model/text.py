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
"""Word and answer vocabularies and the learned text encoder."""
import collections
import re

import numpy as np

from tinynn import layers

PAD = '<pad>'
UNK = '<unk>'
CLS = '<cls>'
SPECIAL_TOKENS = (PAD, UNK, CLS)
PAD_ID = 0
UNK_ID = 1

DEFAULT_TEXT_LENGTH = 100
ROLES = ('situation', 'question')

_WORD_PATTERN = re.compile(r'[a-z0-9]+')


class UnknownTokenError(ValueError):
    """Raised when a word or id is outside the vocabulary."""


def tokenize(text):
    """Splits |text| into lowercase words, dropping punctuation."""
    return _WORD_PATTERN.findall(text.lower())


class Vocabulary:
    """Special tokens followed by the sorted set of known words."""

    def __init__(self, words):
        known = sorted(set(words) - set(SPECIAL_TOKENS))
        self.words = list(SPECIAL_TOKENS) + known
        self._ids = {word: index for index, word in enumerate(self.words)}

    @classmethod
    def from_texts(cls, texts):
        """Builds the vocabulary of every word in |texts|."""
        return cls(word for text in texts for word in tokenize(text))

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._ids

    def encode(self, words, strict=True):
        """Maps |words| to ids. Unknown words raise UnknownTokenError, or map
        to <unk> when |strict| is False."""
        ids = []
        for word in words:
            if word in self._ids:
                ids.append(self._ids[word])
            elif strict:
                raise UnknownTokenError('Unknown word: %s.' % word)
            else:
                ids.append(UNK_ID)
        return np.array(ids, dtype=np.int64)

    def encode_text(self, text, strict=True):
        """Tokenizes and encodes |text|."""
        return self.encode(tokenize(text), strict)


class AnswerVocabulary:
    """Candidate answers of the training split, most frequent first, ties
    broken lexicographically."""

    def __init__(self, answers):
        self.answers = list(answers)
        if len(set(self.answers)) != len(self.answers):
            raise ValueError('Duplicate answers in the vocabulary.')
        self._ids = {answer: index for index, answer in enumerate(self.answers)}

    @classmethod
    def from_answers(cls, answers):
        """Builds the vocabulary from every training answer."""
        counts = collections.Counter(answers)
        return cls(
            sorted(counts, key=lambda answer: (-counts[answer], answer)))

    def __len__(self):
        return len(self.answers)

    def __contains__(self, answer):
        return answer in self._ids

    def index(self, answer):
        """Returns the id of |answer| or None if it is not a candidate."""
        return self._ids.get(answer)


TextTokens = collections.namedtuple('TextTokens',
                                    ['ids', 'embedded', 'mask', 'role'])


class TextEncoder(layers.Module):
    """Shared word embedding plus a learned per-position embedding over a
    fixed padded length. Padding rows are zero."""

    def __init__(self,
                 vocab_size,
                 dim,
                 rng,
                 max_length=DEFAULT_TEXT_LENGTH,
                 dtype=np.float64):
        super().__init__(dtype)
        self.vocab_size = vocab_size
        self.max_length = max_length
        self.words = self.add_module(
            'words', layers.Embedding(vocab_size, dim, rng, dtype))
        self.positions = self.add_module(
            'positions', layers.Embedding(max_length, dim, rng, dtype))

    def pad(self, ids):
        """Returns (ids padded or truncated to max_length, mask)."""
        ids = np.asarray(ids, dtype=np.int64)[:self.max_length]
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise UnknownTokenError('Token id outside a vocabulary of %d.' %
                                    self.vocab_size)
        padded = np.full(self.max_length, PAD_ID, dtype=np.int64)
        padded[:len(ids)] = ids
        mask = np.zeros(self.max_length, dtype=bool)
        mask[:len(ids)] = True
        return padded, mask

    def forward(self, ids, role):
        """Encodes |ids| (unpadded) as TextTokens."""
        if role not in ROLES:
            raise ValueError('Unknown text role: %s.' % role)
        padded, mask = self.pad(ids)
        words, word_cache = self.words.forward(padded)
        positions, position_cache = self.positions.forward(
            np.arange(self.max_length))
        embedded = (words + positions) * mask[:, None]
        return TextTokens(padded, embedded, mask,
                          role), (word_cache, position_cache, mask)

    def backward(self, d_embedded, cache):
        """Accumulates embedding gradients."""
        word_cache, position_cache, mask = cache
        d_embedded = d_embedded * mask[:, None]
        self.words.backward(d_embedded, word_cache)
        self.positions.backward(d_embedded, position_cache)
