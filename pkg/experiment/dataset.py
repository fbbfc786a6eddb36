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
"""Generating, saving and loading synthetic datasets.

A dataset directory holds:

  scenes.json        every scene, in scene id order
  clouds/<id>.ply    sampled point cloud of each scene
  train.jsonl        training episodes (annotation format)
  val.jsonl          validation episodes, from scenes unseen in training
  vocab.json         word and answer vocabularies of the training split
"""
import collections
import json
import os

from common import filesystem
from common import logs
from common import utils
from experiment import config as config_lib
from model import situnet
from model import text
from scenegen import annotations
from scenegen import episodes as episodes_lib
from scenegen import scenes as scenes_lib
from tokenization import cloud_io
from tokenization import voxelize

DATASET_DIR = 'dataset'
SCENES_FILENAME = 'scenes.json'
CLOUDS_DIR = 'clouds'
TRAIN_FILENAME = 'train.jsonl'
VAL_FILENAME = 'val.jsonl'
VOCAB_FILENAME = 'vocab.json'
SPLITS = ('train', 'val')

MAX_SCENE_ATTEMPTS = 20

logger = logs.Logger('dataset')

Dataset = collections.namedtuple(
    'Dataset', ['directory', 'scenes', 'train', 'val', 'vocab', 'answers'])

# Everything a worker needs to build one scene and its episodes.
SceneTask = collections.namedtuple('SceneTask', [
    'index', 'seed', 'scene_config', 'episodes_per_scene', 'families',
    'point_density'
])


def dataset_dir(run_dir):
    """The dataset directory of |run_dir|."""
    return os.path.join(run_dir, DATASET_DIR)


def cloud_path(directory, scene_id):
    """Path of the point cloud file of |scene_id|."""
    return os.path.join(directory, CLOUDS_DIR, '%s.ply' % scene_id)


def scene_id_of(index):
    """Scene ids sort in generation order."""
    return 'scene%04d' % index


def build_scene(task):
    """Generates scene |task.index| and its episodes. Scenes whose objects
    cannot be placed are redrawn with the next attempt seed. Returns (Scene,
    PointCloud, episodes)."""
    scene_id = scene_id_of(task.index)
    for attempt in range(MAX_SCENE_ATTEMPTS):
        scene_seed = utils.derive_seed(task.seed, 'scene', task.index,
                                       attempt)
        try:
            scene = scenes_lib.generate_scene(scene_id, scene_seed,
                                              task.scene_config)
        except scenes_lib.PlacementFailureError:
            continue
        episodes = episodes_lib.generate_episodes(scene,
                                                  task.episodes_per_scene,
                                                  scene_seed, task.families)
        if not episodes:
            continue
        cloud = scenes_lib.sample_point_cloud(
            scene, task.point_density,
            utils.derive_seed(task.seed, 'cloud', task.index))
        return scene, cloud, episodes
    raise scenes_lib.PlacementFailureError(
        'Could not generate scene %s in %d attempts.' %
        (scene_id, MAX_SCENE_ATTEMPTS))


def num_val_scenes(num_scenes, val_fraction):
    """Validation takes the last scenes; at least one scene stays in
    training."""
    return min(int(round(num_scenes * val_fraction)), num_scenes - 1)


def build_vocabularies(train_episodes):
    """Word vocabulary over situation and question text and answer
    vocabulary of the training split."""
    vocab = text.Vocabulary.from_texts(
        [episode.situation_text for episode in train_episodes] +
        [episode.question for episode in train_episodes])
    answers = text.AnswerVocabulary.from_answers(
        [episode.answer for episode in train_episodes])
    return vocab, answers


def _write_json(path, data):
    filesystem.write_atomic(path, json.dumps(data, indent=1) + '\n')


def generate_dataset(config, directory):
    """Generates the dataset of |config| into |directory|. The output depends
    on the config and seed only, not on the worker count."""
    dataset = config['dataset']
    scene_config = config_lib.scene_config(config)
    tasks = [
        SceneTask(index, config['seed'], scene_config,
                  dataset['episodes_per_scene'], tuple(dataset['families']),
                  dataset['point_density'])
        for index in range(dataset['num_scenes'])
    ]
    logger.info('Generating %d scenes with %d workers.', len(tasks),
                config['workers'])
    results = utils.parallel_map(build_scene, tasks, config['workers'])

    filesystem.create_directory(os.path.join(directory, CLOUDS_DIR))
    for scene, cloud, _ in results:
        cloud_io.write_cloud(cloud_path(directory, scene.scene_id), cloud)
    _write_json(os.path.join(directory, SCENES_FILENAME),
                [scene.to_dict() for scene, _, _ in results])

    num_val = num_val_scenes(len(results), dataset['val_fraction'])
    num_train = len(results) - num_val
    train = [
        episode for _, _, episodes in results[:num_train]
        for episode in episodes
    ]
    val = [
        episode for _, _, episodes in results[num_train:]
        for episode in episodes
    ]
    annotations.write_annotations(os.path.join(directory, TRAIN_FILENAME),
                                  train)
    annotations.write_annotations(os.path.join(directory, VAL_FILENAME), val)

    vocab, answers = build_vocabularies(train)
    _write_json(
        os.path.join(directory, VOCAB_FILENAME),
        collections.OrderedDict([('words', vocab.words),
                                 ('answers', answers.answers)]))
    logger.info('Wrote %d train and %d val episodes to %s.', len(train),
                len(val), directory)
    return Dataset(directory, [scene for scene, _, _ in results], train, val,
                   vocab, answers)


def load_dataset(directory):
    """Reads the dataset in |directory|."""
    scene_data = json.loads(
        filesystem.read(os.path.join(directory, SCENES_FILENAME)))
    scenes = [scenes_lib.Scene.from_dict(data) for data in scene_data]
    vocab_data = json.loads(
        filesystem.read(os.path.join(directory, VOCAB_FILENAME)))
    return Dataset(
        directory, scenes,
        annotations.load_annotations(os.path.join(directory, TRAIN_FILENAME)),
        annotations.load_annotations(os.path.join(directory, VAL_FILENAME)),
        text.Vocabulary(vocab_data['words']),
        text.AnswerVocabulary(vocab_data['answers']))


def split_episodes(dataset, split):
    """Episodes of |split|."""
    if split not in SPLITS:
        raise ValueError('Unknown split: %s.' % split)
    return getattr(dataset, split)


class TokenCache:
    """Tokenizes each scene cloud once per token configuration."""

    def __init__(self, directory, tokens_config, seed=0):
        self.directory = directory
        self.tokens_config = tokens_config
        self.seed = seed
        self._tokens = {}

    def get(self, scene_id):
        """TokenSet of |scene_id|."""
        if scene_id not in self._tokens:
            cloud = cloud_io.read_cloud(cloud_path(self.directory, scene_id))
            self._tokens[scene_id] = voxelize.tokenize_cloud(
                cloud,
                self.tokens_config['voxel_size'],
                self.tokens_config['num_tokens'],
                len(scenes_lib.CATEGORIES),
                seed=utils.derive_seed(self.seed, 'tokens', scene_id),
                strategy=self.tokens_config['strategy'])
        return self._tokens[scene_id]


def model_inputs(episode, tokens, vocab, answers):
    """ModelInputs of |episode|. Unknown words map to <unk>; an answer outside
    |answers| becomes None."""
    return situnet.ModelInputs(
        tokens, vocab.encode_text(episode.situation_text, strict=False),
        vocab.encode_text(episode.question, strict=False), episode.situation,
        answers.index(episode.answer))
