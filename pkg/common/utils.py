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
"""Common utilities."""

import hashlib
import multiprocessing
import os

import numpy as np

ROOT_DIR = os.path.abspath(os.path.dirname(os.path.dirname(__file__)))


def derive_seed(seed, *keys):
    """Returns a 32 bit seed derived from |seed| and |keys|. Used to give every
    scene, episode and training run its own independent random stream."""
    digest = hashlib.sha1(repr((seed,) + keys).encode('utf-8')).digest()
    return int.from_bytes(digest[:4], 'little')


def make_rng(seed, *keys):
    """Returns a numpy Generator seeded from |seed| and |keys|."""
    return np.random.default_rng(derive_seed(seed, *keys))


def parallel_map(function, items, workers=1):
    """Returns [function(item) for item in items], computed on a
    multiprocessing.Pool of |workers| processes when |workers| > 1. Results
    keep the order of |items|."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with multiprocessing.Pool(min(workers, len(items))) as pool:
        return pool.map(function, items)
