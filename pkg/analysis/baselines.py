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
"""Chance-level situation and answer predictions."""
import numpy as np

from analysis import metrics
from common import utils
from model import modes

RANDOM_BASELINE = 'random'


def random_situation_baseline(bounds, seed, count):
    """Draws |count| situations uniformly over the x-y extent of |bounds|
    with uniform headings. Deterministic per |seed|."""
    if count < 1:
        raise ValueError('Need at least one prediction, got %d.' % count)
    rng = np.random.default_rng(seed)
    return [modes.corrupted_situation(bounds, rng) for _ in range(count)]


def expected_orientation_accuracy(threshold_deg):
    """Chance of a uniform heading landing within |threshold_deg|."""
    return min(2.0 * threshold_deg / 360.0, 1.0)


def random_baseline_report(episodes, scene_bounds, answer_vocab, seed):
    """MetricsReport of chance on |episodes|: each episode gets a random
    situation in its scene's |scene_bounds| and a uniformly random answer
    from |answer_vocab|."""
    if not episodes:
        raise ValueError('Nothing to score.')
    situations = [
        random_situation_baseline(
            scene_bounds[episode.scene_id],
            utils.derive_seed(seed, RANDOM_BASELINE, episode.episode_id),
            1)[0] for episode in episodes
    ]
    rng = utils.make_rng(seed, RANDOM_BASELINE, 'answers')
    logits = [rng.normal(size=len(answer_vocab)) for _ in episodes]
    return metrics.compute_report(
        situations, [episode.situation for episode in episodes], logits,
        [episode.answer for episode in episodes],
        [episode.question_type for episode in episodes], answer_vocab,
        [episode.family for episode in episodes])
