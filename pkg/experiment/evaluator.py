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
"""Evaluates a trained model on a dataset split."""
import collections
import json
import os

from analysis import baselines
from analysis import metrics
from analysis import plotting
from analysis import report as report_lib
from common import filesystem
from common import logs
from experiment import dataset as dataset_lib
from experiment import trainer
from model import modes

REPORT_FILENAME = 'report.yaml'
PREDICTIONS_FILENAME = 'predictions.jsonl'
RANDOM_REPORT_FILENAME = 'random_report.yaml'
THRESHOLD_PLOT_FILENAMES = {
    'loc_acc': 'loc_acc.svg',
    'rot_acc': 'rot_acc.svg',
}

logger = logs.Logger('evaluator')

Prediction = collections.namedtuple(
    'Prediction', ['episode', 'answer', 'logits', 'situation', 'forward'])


def predict(model, dataset, episodes, mode, tokens_config, seed=0):
    """Runs |mode| on every episode in |episodes|."""
    token_cache = dataset_lib.TokenCache(dataset.directory, tokens_config,
                                         seed)
    predictions = []
    for episode in episodes:
        inputs = dataset_lib.model_inputs(episode,
                                          token_cache.get(episode.scene_id),
                                          dataset.vocab, dataset.answers)
        result = modes.run_mode(model, inputs, mode)
        predictions.append(
            Prediction(episode, dataset.answers.answers[result.answer],
                       result.logits, result.situation, result.forward))
    return predictions


def score(predictions, answers):
    """MetricsReport of |predictions| against their episodes."""
    episodes = [prediction.episode for prediction in predictions]
    return metrics.compute_report(
        [prediction.situation for prediction in predictions],
        [episode.situation for episode in episodes],
        [prediction.logits for prediction in predictions],
        [episode.answer for episode in episodes],
        [episode.question_type for episode in episodes], answers,
        [episode.family for episode in episodes])


def prediction_record(prediction):
    """One line of predictions.jsonl."""
    episode = prediction.episode
    position = prediction.situation.position
    return collections.OrderedDict([
        ('episode_id', episode.episode_id),
        ('scene_id', episode.scene_id),
        ('answer', episode.answer),
        ('predicted_answer', prediction.answer),
        ('position', [float(value) for value in position]),
        ('yaw', float(prediction.situation.yaw)),
    ])


def write_predictions(path, predictions):
    """Atomically writes one JSON record per prediction."""
    filesystem.write_atomic(
        path, ''.join(
            json.dumps(prediction_record(prediction)) + '\n'
            for prediction in predictions))


def evaluate_model(config, model, dataset, mode, seed, split='val'):
    """Returns (MetricsReport, predictions) of |model| on |split|."""
    episodes = dataset_lib.split_episodes(dataset, split)
    if not episodes:
        raise ValueError('The %s split is empty.' % split)
    predictions = predict(model, dataset, episodes, mode, config['tokens'],
                          seed)
    return score(predictions, dataset.answers), predictions


def evaluate(config,
             run_dir,
             checkpoint_dir=None,
             mode=None,
             seed=None,
             split='val'):
    """Evaluates the checkpoint of |run_dir| and writes report.yaml and
    predictions.jsonl next to it."""
    mode = config['mode'] if mode is None else mode
    seed = config['seed'] if seed is None else seed
    if checkpoint_dir is None:
        checkpoint_dir = os.path.join(run_dir, trainer.CHECKPOINT_DIR)
    dataset = dataset_lib.load_dataset(dataset_lib.dataset_dir(run_dir))
    model = trainer.load_model(config, dataset, checkpoint_dir)
    return evaluate_and_write(config, model, dataset, run_dir, mode, seed,
                              split)


def random_baseline(dataset, episodes, seed):
    """MetricsReport of random situations and answers on |episodes|."""
    scene_bounds = {scene.scene_id: scene.bounds for scene in dataset.scenes}
    return baselines.random_baseline_report(episodes, scene_bounds,
                                            dataset.answers, seed)


def write_threshold_plots(output_dir, reports):
    """Writes accuracy against threshold for each (label, MetricsReport) in
    |reports|, one plot per situation metric."""
    plotter = plotting.Plotter([label for label, _ in reports])
    for field, filename in THRESHOLD_PLOT_FILENAMES.items():
        plotter.write_threshold_plot(reports,
                                     os.path.join(output_dir, filename),
                                     field=field)


def evaluate_and_write(config, model, dataset, output_dir, mode, seed,
                       split='val'):
    """evaluate_model, then write the report, the random baseline report,
    the predictions and the threshold plots into |output_dir|."""
    report, predictions = evaluate_model(config, model, dataset, mode, seed,
                                         split)
    header = {'mode': mode, 'seed': seed, 'split': split}
    report_lib.write_report(os.path.join(output_dir, REPORT_FILENAME), report,
                            header)
    chance = random_baseline(
        dataset, [prediction.episode for prediction in predictions], seed)
    report_lib.write_report(
        os.path.join(output_dir, RANDOM_REPORT_FILENAME), chance,
        dict(header, mode=baselines.RANDOM_BASELINE))
    write_threshold_plots(output_dir,
                          [(mode, report), (baselines.RANDOM_BASELINE, chance)])
    write_predictions(os.path.join(output_dir, PREDICTIONS_FILENAME),
                      predictions)
    logger.info('EM@1 %.3f, Acc@%gm %.3f on %d %s episodes.',
                report.em1_overall,
                metrics.LOCALIZATION_THRESHOLDS[-1],
                report.loc_acc[metrics.LOCALIZATION_THRESHOLDS[-1]],
                len(predictions),
                split,
                extras={
                    'mode': mode,
                    'seed': seed
                })
    return report, predictions
