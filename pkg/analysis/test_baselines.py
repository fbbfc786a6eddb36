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
"""Tests for baselines.py."""
import numpy as np
import pytest

from analysis import baselines
from analysis import metrics
from analysis import stat_tests
from geometry import frames
from model import text
from scenegen import episodes as scenegen_episodes

BOUNDS = np.array([[0.0, 0.0, 0.0], [4.0, 3.0, 2.5]])


def test_random_orientation_accuracy_is_chance():
    """Tests that random headings hit 30 degrees one time in six."""
    samples = 100000
    predictions = baselines.random_situation_baseline(BOUNDS, 0, samples)
    truths = [frames.SituationVector.from_yaw([1.0, 1.0, 0.0], 0.7)] * samples
    observed = metrics.orientation_accuracy(predictions, truths, 30.0)
    expected = baselines.expected_orientation_accuracy(30.0)
    assert expected == pytest.approx(1.0 / 6.0)
    assert stat_tests.within_sigmas(observed, expected, samples)


def test_random_positions_stay_in_bounds():
    """Tests that random positions lie on the floor inside the room."""
    predictions = baselines.random_situation_baseline(BOUNDS, 1, 200)
    positions = np.array([situation.position for situation in predictions])
    assert np.all(positions[:, :2] >= BOUNDS[0, :2])
    assert np.all(positions[:, :2] <= BOUNDS[1, :2])
    assert np.all(positions[:, 2] == 0.0)


def test_random_localization_matches_area_fraction():
    """Tests random localization against the covered fraction of a dense
    grid of floor points."""
    samples = 20000
    truth = frames.SituationVector.from_yaw([1.0, 1.5, 0.0], 0.0)
    predictions = baselines.random_situation_baseline(BOUNDS, 2, samples)
    observed = metrics.localization_accuracy(predictions, [truth] * samples,
                                             1.0)
    x, y = np.meshgrid(np.linspace(0.0, 4.0, 801), np.linspace(0.0, 3.0, 601))
    expected = np.mean(np.hypot(x - 1.0, y - 1.5) <= 1.0)
    assert stat_tests.within_sigmas(observed, expected, samples)


def test_random_baseline_is_deterministic():
    """Tests that one seed gives one set of predictions."""
    first = baselines.random_situation_baseline(BOUNDS, 3, 5)
    second = baselines.random_situation_baseline(BOUNDS, 3, 5)
    for one, other in zip(first, second):
        np.testing.assert_array_equal(one.position, other.position)
        assert one.yaw == other.yaw


def test_random_baseline_needs_a_count():
    """Tests that asking for no predictions is an error."""
    with pytest.raises(ValueError):
        baselines.random_situation_baseline(BOUNDS, 0, 0)


@pytest.mark.parametrize('threshold,expected', [(15.0, 1.0 / 12.0),
                                                (30.0, 1.0 / 6.0),
                                                (180.0, 1.0), (200.0, 1.0)])
def test_expected_orientation_accuracy(threshold, expected):
    """Tests the closed-form chance level."""
    assert baselines.expected_orientation_accuracy(threshold) == pytest.approx(
        expected)


def test_random_baseline_report():
    """Tests the chance-level report of two episodes and that it is
    deterministic."""
    answers = text.AnswerVocabulary.from_answers(['yes', 'no', 'chair'])
    truth = frames.SituationVector.from_yaw([1.0, 1.0, 0.0], 0.0)
    episodes = [
        scenegen_episodes.Episode('ep%d' % index, 'scene0', 'I am here.',
                                  'Is it there?', answer, truth, 'Is', 'side')
        for index, answer in enumerate(['yes', 'chair'])
    ]
    report = baselines.random_baseline_report(episodes, {'scene0': BOUNDS},
                                              answers, 0)
    assert report.counts['episodes'] == 2
    assert report.em1_by_family.keys() == {'side'}
    assert report == baselines.random_baseline_report(
        episodes, {'scene0': BOUNDS}, answers, 0)


def test_random_baseline_report_needs_episodes():
    """Tests that an empty split is an error."""
    with pytest.raises(ValueError):
        baselines.random_baseline_report([], {}, None, 0)
