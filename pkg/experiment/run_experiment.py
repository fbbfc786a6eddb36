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
"""Command-line entry point: generate a dataset, train, evaluate, run the
ablation grid and plot episodes.

  python -m experiment.run_experiment generate -c smoke
  python -m experiment.run_experiment train -c smoke --set mode=full
  python -m experiment.run_experiment eval -c smoke
  python -m experiment.run_experiment ablate -c acceptance
  python -m experiment.run_experiment plot -c smoke -e scene0032_0001
"""
import argparse
import os
import sys

from analysis import rendering
from common import logs
from experiment import ablation
from experiment import config as config_lib
from experiment import dataset as dataset_lib
from experiment import evaluator
from experiment import trainer

PLOTS_DIR = 'plots'
COMMANDS = ('generate', 'train', 'eval', 'ablate', 'plot')

# Errors that are the user's to fix. Input errors of every module subclass
# ValueError. Anything else is a bug and keeps its traceback.
USER_ERRORS = (config_lib.ValidationError, FileNotFoundError, ValueError)


def prepare_run_dir(config):
    """Creates the run directory and writes the resolved config into it."""
    run_dir = config['output_dir']
    config_lib.write_config(run_dir, config)
    return run_dir


def cmd_generate(config, args):  # pylint: disable=unused-argument
    """Generates the dataset of |config|."""
    run_dir = prepare_run_dir(config)
    dataset_lib.generate_dataset(config, dataset_lib.dataset_dir(run_dir))


def cmd_train(config, args):  # pylint: disable=unused-argument
    """Trains config.mode with config.seed."""
    trainer.train(config, prepare_run_dir(config))


def cmd_eval(config, args):
    """Evaluates a checkpoint and writes report.yaml."""
    evaluator.evaluate(config,
                       prepare_run_dir(config),
                       checkpoint_dir=args.checkpoint,
                       split=args.split)


def cmd_ablate(config, args):  # pylint: disable=unused-argument
    """Runs every mode, seed and override cell."""
    ablation.run_ablation_suite(config, prepare_run_dir(config))


def plot_episode(config, run_dir, episode_id, checkpoint_dir=None,
                 output_path=None):
    """Draws the scene of |episode_id| with its ground-truth situation. With a
    trained checkpoint, also draws the predicted situation and the token
    activations before and after re-encoding. Returns the SVG path."""
    dataset = dataset_lib.load_dataset(dataset_lib.dataset_dir(run_dir))
    episodes = {
        episode.episode_id: episode
        for episode in dataset.train + dataset.val
    }
    if episode_id not in episodes:
        raise ValueError('Unknown episode: %s.' % episode_id)
    episode = episodes[episode_id]
    scenes = {scene.scene_id: scene for scene in dataset.scenes}
    scene = scenes[episode.scene_id]

    if checkpoint_dir is None:
        checkpoint_dir = os.path.join(run_dir, trainer.CHECKPOINT_DIR)
    kwargs = {}
    if os.path.exists(checkpoint_dir):
        model = trainer.load_model(config, dataset, checkpoint_dir)
        prediction = evaluator.predict(model, dataset, [episode],
                                       config['mode'], config['tokens'],
                                       config['seed'])[0]
        kwargs = {
            'prediction': prediction.situation,
            'tokens': dataset_lib.TokenCache(
                dataset.directory, config['tokens'],
                config['seed']).get(scene.scene_id),
            'before': prediction.forward.fused,
            'after': prediction.forward.reencoded,
        }

    if output_path is None:
        output_path = os.path.join(run_dir, PLOTS_DIR, '%s.svg' % episode_id)
    rendering.write_scene(output_path,
                          scene,
                          ground_truth=episode.situation,
                          title='%s: %s' % (episode_id, episode.question),
                          **kwargs)
    return output_path


def cmd_plot(config, args):
    """Writes plots/<episode>.svg."""
    plot_episode(config, prepare_run_dir(config), args.episode,
                 args.checkpoint, args.output)


_COMMAND_FUNCTIONS = {
    'generate': cmd_generate,
    'train': cmd_train,
    'eval': cmd_eval,
    'ablate': cmd_ablate,
    'plot': cmd_plot,
}


def get_parser():
    """Returns the argument parser of every subcommand."""
    parser = argparse.ArgumentParser(
        description='Situation-grounded 3D question answering benchmark.')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS:
        subparser = subparsers.add_parser(
            command, help=_COMMAND_FUNCTIONS[command].__doc__)
        subparser.add_argument(
            '-c',
            '--config',
            help='Preset name (%s) or path of a config yaml file.' %
            ', '.join(config_lib.PRESETS),
            default='default')
        subparser.add_argument('--set',
                               help='Override a config value, e.g. '
                               '--set model.dim=32. Repeatable.',
                               action='append',
                               default=[],
                               dest='overrides')
        if command in ('eval', 'plot'):
            subparser.add_argument('--checkpoint',
                                   help='Checkpoint directory. The run '
                                   'directory\'s checkpoint by default.',
                                   default=None)
        if command == 'eval':
            subparser.add_argument('--split',
                                   choices=dataset_lib.SPLITS,
                                   default='val')
        if command == 'plot':
            subparser.add_argument('-e',
                                   '--episode',
                                   help='Episode id.',
                                   required=True)
            subparser.add_argument('-o',
                                   '--output',
                                   help='Output SVG path.',
                                   default=None)
    return parser


def main(argv=None):
    """Runs one subcommand. Returns 0 on success and 1 on a user error."""
    logs.initialize()
    args = get_parser().parse_args(argv)
    try:
        config = config_lib.read_config(args.config, args.overrides)
        _COMMAND_FUNCTIONS[args.command](config, args)
    except USER_ERRORS as error:
        logs.error('%s failed: %s', args.command, error)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
