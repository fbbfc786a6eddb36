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
"""Top-down SVG rendering of scenes, situations and token activations.

Red arrows are ground-truth situations and blue arrows estimates. Optional
side panels shade each visual token by the norm of its features before and
after situational re-encoding."""

import os

import jinja2
import numpy as np

from common import filesystem
from common import utils
from scenegen import scenes

PIXELS_PER_METER = 80.0
MARGIN = 30.0
ARROW_LENGTH = 0.6
ARROW_COLORS = {'gt': 'red', 'pred': 'blue'}


def _hex_color(rgb):
    return '#%02x%02x%02x' % tuple(int(round(255 * value)) for value in rgb)


def token_activations(token_states, mask):
    """L2 norm of each real token's state scaled to [0, 1]; padding is 0."""
    norms = np.linalg.norm(np.asarray(token_states, dtype=np.float64), axis=1)
    norms = np.where(mask, norms, 0.0)
    peak = norms.max() if norms.size else 0.0
    return norms / peak if peak > 0 else norms


class _Canvas:
    """Maps room coordinates (meters, y up) to panel pixels (y down)."""

    def __init__(self, scene):
        self.depth = scene.depth
        self.room_width = scene.width * PIXELS_PER_METER
        self.room_height = scene.depth * PIXELS_PER_METER
        self.panel_width = self.room_width + 2 * MARGIN

    def point(self, x, y, panel=0):
        """Pixel position of (x, y) in panel |panel|."""
        return (round(panel * self.panel_width + MARGIN + x * PIXELS_PER_METER,
                      2),
                round(MARGIN + (self.depth - y) * PIXELS_PER_METER, 2))


def _objects(scene, canvas):
    objects = []
    for obj in scene.objects:
        x_min, y_min, x_max, y_max = obj.footprint
        left, top = canvas.point(x_min, y_max)
        label_x, label_y = canvas.point(obj.center[0], obj.center[1])
        objects.append({
            'x': left,
            'y': top,
            'width': round((x_max - x_min) * PIXELS_PER_METER, 2),
            'height': round((y_max - y_min) * PIXELS_PER_METER, 2),
            'fill': _hex_color(scenes.COLORS[obj.color]),
            'label': '%s %s' % (obj.color, obj.category),
            'label_x': label_x,
            'label_y': label_y,
        })
    return objects


def _arrow(kind, situation, canvas):
    start = situation.position[:2]
    end = start + ARROW_LENGTH * situation.heading[:2]
    x1, y1 = canvas.point(*start)
    x2, y2 = canvas.point(*end)
    return {
        'kind': kind,
        'color': ARROW_COLORS[kind],
        'x1': x1,
        'y1': y1,
        'x2': x2,
        'y2': y2,
    }


def _cells(tokens, activations, canvas, panel):
    size = tokens.pitch * PIXELS_PER_METER
    cells = []
    for anchor, activation, real in zip(tokens.anchors, activations,
                                        tokens.mask):
        if not real:
            continue
        x, y = canvas.point(anchor[0] - tokens.pitch / 2,
                            anchor[1] + tokens.pitch / 2, panel)
        cells.append({
            'x': x,
            'y': y,
            'size': round(size, 2),
            'opacity': round(float(activation), 4),
        })
    return cells


def render_scene(scene,
                 ground_truth=None,
                 prediction=None,
                 tokens=None,
                 before=None,
                 after=None,
                 title=None):
    """Renders |scene| with the ground-truth and predicted situations.

    Arguments:
      tokens: TokenSet whose activations are drawn, if any.
      before: N x D token states before re-encoding (needs |tokens|).
      after: N x D token states after re-encoding (needs |tokens|).

    Returns the SVG document as a string.
    """
    canvas = _Canvas(scene)
    panels = [{
        'name': 'scene',
        'title': title or scene.scene_id,
        'x': 0.0,
        'show_objects': True,
        'cells': []
    }]
    for name, states in (('before', before), ('after', after)):
        if states is None:
            continue
        if tokens is None:
            raise ValueError('Token states need the TokenSet they belong to.')
        index = len(panels)
        panels.append({
            'name': name,
            'title': '%s re-encoding' % name,
            'x': round(index * canvas.panel_width, 2),
            'show_objects': False,
            'cells': _cells(tokens, token_activations(states, tokens.mask),
                            canvas, index),
        })

    arrows = []
    if ground_truth is not None:
        arrows.append(_arrow('gt', ground_truth, canvas))
    if prediction is not None:
        arrows.append(_arrow('pred', prediction, canvas))

    templates_dir = os.path.join(utils.ROOT_DIR, 'analysis', 'report_templates')
    environment = jinja2.Environment(
        undefined=jinja2.StrictUndefined,
        loader=jinja2.FileSystemLoader(templates_dir),
        autoescape=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    template = environment.get_template('scene.svg')
    return template.render(title=title or scene.scene_id,
                           width=round(len(panels) * canvas.panel_width, 2),
                           height=round(canvas.room_height + 2 * MARGIN, 2),
                           margin=MARGIN,
                           room_width=round(canvas.room_width, 2),
                           room_height=round(canvas.room_height, 2),
                           panels=panels,
                           objects=_objects(scene, canvas),
                           arrows=arrows)


def write_scene(path, scene, **kwargs):
    """Renders |scene| and atomically writes the SVG to |path|."""
    filesystem.write_atomic(path, render_scene(scene, **kwargs))
