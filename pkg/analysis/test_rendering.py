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
"""Tests for rendering.py."""
import math
import xml.etree.ElementTree as ElementTree

import numpy as np
import pytest

from analysis import rendering
from geometry import frames

SVG = '{http://www.w3.org/2000/svg}'


def _parse(document):
    return ElementTree.fromstring(document.encode('utf-8'))


def _by_class(root, tag, name):
    return [
        element for element in root.iter(SVG + tag)
        if name in element.get('class', '').split()
    ]


def test_scene_only(small_scene):
    """Tests a scene with no situation."""
    root = _parse(rendering.render_scene(small_scene))
    assert len(_by_class(root, 'g', 'object')) == len(small_scene.objects)
    assert not _by_class(root, 'line', 'arrow')
    assert root.find(SVG + 'title').text == 'small'


def test_ground_truth_and_prediction(small_scene):
    """Tests one red and one blue arrow."""
    truth = frames.SituationVector.from_yaw([1.0, 1.5, 0.0], 0.0)
    prediction = frames.SituationVector.from_yaw([2.0, 1.5, 0.0], math.pi / 2)
    root = _parse(
        rendering.render_scene(small_scene,
                               ground_truth=truth,
                               prediction=prediction,
                               title='what is left of me?'))
    arrows = _by_class(root, 'line', 'arrow')
    assert len(arrows) == 2
    assert [arrow.get('stroke') for arrow in arrows] == ['red', 'blue']
    gt_arrow = _by_class(root, 'line', 'gt')[0]
    # Facing +y points up the page.
    assert float(gt_arrow.get('x2')) == float(gt_arrow.get('x1'))
    assert float(gt_arrow.get('y2')) < float(gt_arrow.get('y1'))
    pred_arrow = _by_class(root, 'line', 'pred')[0]
    # A quarter turn counterclockwise faces -x.
    assert float(pred_arrow.get('x2')) < float(pred_arrow.get('x1'))


def test_object_pixels(small_scene):
    """Tests that the room's top-left corner is at the margin."""
    root = _parse(rendering.render_scene(small_scene))
    room = _by_class(root, 'rect', 'room')[0]
    assert float(room.get('x')) == rendering.MARGIN
    assert float(room.get('width')) == 4.0 * rendering.PIXELS_PER_METER
    chair = _by_class(root, 'g', 'object')[0].find(SVG + 'rect')
    assert float(chair.get('x')) == pytest.approx(rendering.MARGIN + 0.75 * 80)
    assert float(chair.get('y')) == pytest.approx(rendering.MARGIN +
                                                  (3.0 - 1.25) * 80)


def test_activation_panels(small_scene, small_tokens):
    """Tests the before and after panels with one cell per real token."""
    rng = np.random.default_rng(0)
    states = rng.normal(size=(len(small_tokens.mask), 4))
    root = _parse(
        rendering.render_scene(small_scene,
                               tokens=small_tokens,
                               before=states,
                               after=2 * states))
    panels = _by_class(root, 'g', 'panel')
    assert [panel.get('id') for panel in panels] == ['scene', 'before', 'after']
    cells = _by_class(root, 'rect', 'token')
    assert len(cells) == 2 * int(small_tokens.mask.sum())
    # Objects are only drawn on the scene panel.
    assert len(_by_class(root, 'g', 'object')) == len(small_scene.objects)


def test_states_without_tokens(small_scene):
    """Tests that token states need their TokenSet."""
    with pytest.raises(ValueError):
        rendering.render_scene(small_scene, before=np.ones((3, 4)))


def test_token_activations_ignore_padding():
    """Tests that padding tokens have no activation and the peak is 1."""
    states = np.array([[3.0, 4.0], [1.0, 0.0], [100.0, 0.0]])
    activations = rendering.token_activations(states,
                                              np.array([True, True, False]))
    np.testing.assert_allclose(activations, [1.0, 0.2, 0.0])


def test_write_scene(small_scene, tmp_path):
    """Tests that write_scene creates the SVG file and its directory."""
    path = tmp_path / 'plots' / 'small.svg'
    rendering.write_scene(str(path), small_scene)
    assert _parse(path.read_text()).tag == SVG + 'svg'
