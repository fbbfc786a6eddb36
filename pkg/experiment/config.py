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
"""Run configuration: schema, presets, overrides and validation.

A run config is a YAML file nested by section (dataset, tokens, situation,
model, training, ablation). Missing keys take their schema default, unknown
keys are rejected and every value is range checked. Command-line overrides
use dotted paths, e.g. --set model.dim=32.
"""
import collections
import os

from common import environment
from common import logs
from common import utils
from common import yaml_utils
from geometry import rotations
from model import modes
from model import situnet
from scenegen import oracle
from scenegen import scenes
from situation import targets
from tokenization import voxelize

RESOURCES_DIR = os.path.join(utils.ROOT_DIR, 'experiment', 'resources')
PRESETS = ('default', 'smoke', 'acceptance')
CONFIG_FILENAME = 'config.yaml'

ConfigField = collections.namedtuple(
    'ConfigField',
    ['path', 'type', 'default', 'minimum', 'maximum', 'choices'])


def _field(path,
           field_type,
           default,
           minimum=None,
           maximum=None,
           choices=None):
    return ConfigField(path, field_type, default, minimum, maximum, choices)


_SCENE = scenes.DEFAULT_SCENE_CONFIG
_MODEL = situnet.DEFAULT_MODEL_CONFIG
_LOSS = modes.DEFAULT_LOSS_CONFIG

SCHEMA = (
    _field('seed', int, 0, minimum=0),
    _field('seeds', 'int_list', [0, 1, 2], minimum=0),
    _field('output_dir', str, 'runs/default'),
    _field('mode', str, 'full', choices=modes.MODES),
    _field('modes', 'str_list', list(modes.MODES), choices=modes.MODES),
    _field('workers', int, 1, minimum=1, maximum=64),
    _field('dataset.num_scenes', int, 400, minimum=1),
    _field('dataset.episodes_per_scene', int, 10, minimum=1),
    _field('dataset.val_fraction', float, 0.2, minimum=0.0, maximum=0.9),
    _field('dataset.families',
           'str_list',
           list(oracle.FAMILIES),
           choices=oracle.FAMILIES),
    _field('dataset.point_density',
           float,
           scenes.DEFAULT_POINT_DENSITY,
           minimum=1.0),
    _field('dataset.room_min', float, _SCENE.room_min, minimum=1.0),
    _field('dataset.room_max', float, _SCENE.room_max, minimum=1.0),
    _field('dataset.room_height', float, _SCENE.room_height, minimum=0.5),
    _field('dataset.min_objects', int, _SCENE.min_objects, minimum=2),
    _field('dataset.max_objects', int, _SCENE.max_objects, minimum=2),
    _field('tokens.voxel_size',
           float,
           voxelize.DEFAULT_VOXEL_SIZE,
           minimum=0.005,
           maximum=2.0),
    _field('tokens.num_tokens',
           int,
           voxelize.DEFAULT_NUM_TOKENS,
           minimum=1,
           maximum=4096),
    _field('tokens.strategy',
           str,
           'occupancy',
           choices=voxelize.SAMPLING_STRATEGIES),
    _field('situation.sigma_columns',
           float,
           _LOSS.sigma_columns,
           minimum=0.1,
           maximum=20.0),
    _field('situation.enlarge', float, _LOSS.enlarge, minimum=1.0,
           maximum=10.0),
    _field('situation.rotation_weight',
           float,
           _LOSS.rotation_weight,
           minimum=0.0),
    _field('situation.position_loss',
           str,
           _LOSS.position_loss,
           choices=targets.POSITION_LOSSES),
    _field('situation.rotation_supervision',
           str,
           _LOSS.rotation_supervision,
           choices=targets.ROTATION_SUPERVISION),
    _field('situation.teacher_forcing',
           float,
           _LOSS.teacher_forcing,
           minimum=0.0,
           maximum=1.0),
    _field('model.dim', int, _MODEL.dim, minimum=2, maximum=1024),
    _field('model.heads', int, _MODEL.heads, minimum=1, maximum=64),
    _field('model.fusion_layers', int, _MODEL.fusion_layers, minimum=1),
    _field('model.reencode_layers', int, _MODEL.reencode_layers, minimum=1),
    _field('model.answer_layers', int, _MODEL.answer_layers, minimum=1),
    _field('model.pe_hidden', int, _MODEL.pe_hidden, minimum=1),
    _field('model.text_length', int, _MODEL.text_length, minimum=1),
    _field('model.use_3d_pe', bool, _MODEL.use_3d_pe),
    _field('model.use_situational_pe', bool, _MODEL.use_situational_pe),
    _field('model.use_reencode', bool, _MODEL.use_reencode),
    _field('model.rotation_repr',
           str,
           _MODEL.rotation_repr,
           choices=tuple(rotations.ROTATION_CHANNELS)),
    _field('model.situated_scale',
           float,
           _MODEL.situated_scale,
           minimum=0.01),
    _field('training.epochs', int, 30, minimum=1),
    _field('training.batch_size', int, 8, minimum=1),
    _field('training.lr', float, 2e-5, minimum=0.0),
    _field('training.weight_decay', float, 0.05, minimum=0.0),
    _field('training.milestones', 'int_list', [10, 20], minimum=0),
    _field('training.gamma', float, 0.1, minimum=0.0, maximum=1.0),
    _field('training.situation_weight',
           float,
           _LOSS.situation_weight,
           minimum=0.0),
    _field('training.qa_weight', float, _LOSS.qa_weight, minimum=0.0),
    _field('ablation.num_tokens', 'int_list', [], minimum=1),
    _field('ablation.voxel_size', 'float_list', [], minimum=0.005),
    _field('ablation.rotation_repr',
           'str_list', [],
           choices=tuple(rotations.ROTATION_CHANNELS)),
)

FIELDS = collections.OrderedDict((field.path, field) for field in SCHEMA)
SECTIONS = ('dataset', 'tokens', 'situation', 'model', 'training', 'ablation')

# Ablation axes and the config field each one overrides.
ABLATION_AXES = collections.OrderedDict([
    ('num_tokens', 'tokens.num_tokens'),
    ('voxel_size', 'tokens.voxel_size'),
    ('rotation_repr', 'model.rotation_repr'),
])


class ValidationError(Exception):
    """Error validating user input to this program."""


def flatten(data, prefix=''):
    """Returns {dotted path: value} for nested dicts."""
    flat = collections.OrderedDict()
    for key, value in data.items():
        path = '%s%s' % (prefix, key)
        if isinstance(value, dict):
            flat.update(flatten(value, path + '.'))
        else:
            flat[path] = value
    return flat


def unflatten(flat):
    """Inverse of flatten."""
    nested = {}
    for path, value in flat.items():
        node = nested
        parts = path.split('.')
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return nested


def parse_overrides(overrides):
    """Parses 'section.key=value' strings into {path: value}. Values are
    Python literals with a string fallback."""
    parsed = collections.OrderedDict()
    for override in overrides:
        path, separator, value = override.partition('=')
        if not separator or not path.strip():
            raise ValidationError('Override "%s" is not of the form '
                                  'section.key=value.' % override)
        parsed[path.strip()] = environment.eval_value(value.strip())
    return parsed


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _check_scalar(field, value, element_type):
    """Returns (converted value, error message or None)."""
    if element_type is int:
        if not _is_int(value):
            return value, 'must be an int'
    elif element_type is float:
        if not (_is_int(value) or isinstance(value, float)):
            return value, 'must be a number'
        value = float(value)
    elif element_type is bool:
        if not isinstance(value, bool):
            return value, 'must be a bool'
    elif not isinstance(value, str):
        return value, 'must be a string'

    if field.minimum is not None and value < field.minimum:
        return value, 'must be at least %s' % field.minimum
    if field.maximum is not None and value > field.maximum:
        return value, 'must be at most %s' % field.maximum
    if field.choices is not None and value not in field.choices:
        return value, 'must be one of %s' % ', '.join(field.choices)
    return value, None


_LIST_TYPES = {'int_list': int, 'float_list': float, 'str_list': str}


def _check_field(field, value):
    if field.type not in _LIST_TYPES:
        return _check_scalar(field, value, field.type)
    if not isinstance(value, (list, tuple)):
        return value, 'must be a list'
    converted = []
    for element in value:
        element, error = _check_scalar(field, element,
                                       _LIST_TYPES[field.type])
        if error:
            return value, 'elements %s' % error
        converted.append(element)
    return converted, None


def _cross_field_errors(flat):
    errors = []
    if flat['model.dim'] % flat['model.heads']:
        errors.append(('model.heads', 'must divide model.dim (%d)' %
                       flat['model.dim']))
    if flat['dataset.room_min'] > flat['dataset.room_max']:
        errors.append(('dataset.room_min', 'must not exceed dataset.room_max'))
    if flat['dataset.min_objects'] > flat['dataset.max_objects']:
        errors.append(
            ('dataset.min_objects', 'must not exceed dataset.max_objects'))
    if not flat['modes']:
        errors.append(('modes', 'must not be empty'))
    if not flat['seeds']:
        errors.append(('seeds', 'must not be empty'))
    return errors


def resolve(data, overrides=None, source='config'):
    """Validates |data| (nested) with |overrides| ({path: value}) applied.
    Finds as many errors as possible, logging each with its dotted path, and
    returns the complete config as a nested dict in schema order."""
    data = data or {}
    if not isinstance(data, dict):
        raise ValidationError('Config: %s is not a mapping.' % source)
    given = flatten(data)
    given.update(overrides or {})

    valid = True
    for path in given:
        if path not in FIELDS:
            valid = False
            logs.error('Config parameter "%s" is unknown.', path)

    flat = collections.OrderedDict()
    for path, field in FIELDS.items():
        value = given.get(path, field.default)
        value, error = _check_field(field, value)
        if error:
            valid = False
            logs.error('Config parameter "%s" is "%s". It %s.', path, value,
                       error)
        flat[path] = value

    if valid:
        for path, error in _cross_field_errors(flat):
            valid = False
            logs.error('Config parameter "%s" %s.', path, error)

    if not valid:
        raise ValidationError('Config: %s is invalid.' % source)
    return unflatten(flat)


def preset_path(name):
    """Path of the preset config |name|."""
    if name not in PRESETS:
        raise ValidationError('Unknown preset "%s". Expected one of %s.' %
                              (name, ', '.join(PRESETS)))
    return os.path.join(RESOURCES_DIR, '%s.yaml' % name)


def read_config(config_path=None, overrides=()):
    """Reads and validates the config file at |config_path| (a preset name
    or a path, the default preset when None) with 'path=value'
    |overrides|."""
    if config_path is None:
        config_path = 'default'
    if config_path in PRESETS:
        config_path = preset_path(config_path)
    try:
        data = yaml_utils.read(config_path)
    except FileNotFoundError as error:
        raise ValidationError(str(error))
    return resolve(data, parse_overrides(overrides), config_path)


def write_config(run_dir, config):
    """Writes the resolved |config| into |run_dir|."""
    yaml_utils.write(os.path.join(run_dir, CONFIG_FILENAME), config)


def with_overrides(config, overrides):
    """Returns a validated copy of |config| with {path: value} applied."""
    return resolve(config, overrides)


def scene_config(config):
    """The SceneConfig of |config|."""
    dataset = config['dataset']
    return _SCENE._replace(room_min=dataset['room_min'],
                           room_max=dataset['room_max'],
                           room_height=dataset['room_height'],
                           min_objects=dataset['min_objects'],
                           max_objects=dataset['max_objects'])


def model_config(config):
    """The ModelConfig of |config|."""
    model = config['model']
    return situnet.ModelConfig(
        dim=model['dim'],
        heads=model['heads'],
        fusion_layers=model['fusion_layers'],
        reencode_layers=model['reencode_layers'],
        answer_layers=model['answer_layers'],
        pe_hidden=model['pe_hidden'],
        text_length=model['text_length'],
        feature_channels=voxelize.feature_channels(len(scenes.CATEGORIES)),
        use_3d_pe=model['use_3d_pe'],
        use_situational_pe=model['use_situational_pe'],
        use_reencode=model['use_reencode'],
        rotation_repr=model['rotation_repr'],
        situated_scale=model['situated_scale'])


def loss_config(config):
    """The LossConfig of |config|."""
    situation = config['situation']
    training = config['training']
    return modes.LossConfig(
        sigma_columns=situation['sigma_columns'],
        enlarge=situation['enlarge'],
        rotation_weight=situation['rotation_weight'],
        position_loss=situation['position_loss'],
        rotation_supervision=situation['rotation_supervision'],
        situation_weight=training['situation_weight'],
        qa_weight=training['qa_weight'],
        teacher_forcing=situation['teacher_forcing'])
