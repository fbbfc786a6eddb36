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
"""Tests for evaluator.py."""
import json
import os

import pytest

from analysis import metrics
from analysis import report as report_lib
from common import filesystem
from experiment import evaluator
from experiment import trainer

# pylint: disable=redefined-outer-name


@pytest.fixture
def model(tiny_config, tiny_dataset):
    """An untrained model sized for tiny_dataset."""
    return trainer.build_model(tiny_config, tiny_dataset, 0)


def test_evaluate_model_report(tiny_config, tiny_dataset, model):
    """Tests that the report covers every validation episode."""
    report, predictions = evaluator.evaluate_model(tiny_config, model,
                                                   tiny_dataset, 'full', 0)
    assert len(predictions) == len(tiny_dataset.val)
    assert report.counts['episodes'] == len(tiny_dataset.val)
    assert sum(report.counts['by_type'].values()) == len(tiny_dataset.val)
    assert list(report.loc_acc) == list(metrics.LOCALIZATION_THRESHOLDS)
    assert list(report.rot_acc) == list(metrics.ORIENTATION_THRESHOLDS)
    for value in list(report.loc_acc.values()) + list(report.rot_acc.values()):
        assert 0.0 <= value <= 1.0
    for prediction in predictions:
        assert prediction.answer in tiny_dataset.answers


def test_gt_as_intermediate_is_exact(tiny_config, tiny_dataset, model):
    """Tests that gt-as-intermediate reports perfect situation accuracy."""
    report, _ = evaluator.evaluate_model(tiny_config, model, tiny_dataset,
                                         'gt-as-intermediate', 0)
    assert set(report.loc_acc.values()) == {1.0}
    assert set(report.rot_acc.values()) == {1.0}


def test_empty_split(tiny_config, tiny_dataset, model):
    """Tests that evaluating an empty split is an error."""
    with pytest.raises(ValueError):
        evaluator.evaluate_model(tiny_config, model,
                                 tiny_dataset._replace(val=[]), 'full', 0)


def test_evaluate_writes_report_and_predictions(tiny_config, tiny_dataset):
    """Tests the files evaluate writes into the run directory."""
    run_dir = tiny_config['output_dir']
    trainer.train(tiny_config, run_dir)
    report, _ = evaluator.evaluate(tiny_config, run_dir)

    written, header = report_lib.read_report(
        os.path.join(run_dir, evaluator.REPORT_FILENAME))
    assert header == {'mode': 'full', 'seed': 0, 'split': 'val'}
    assert written.em1_overall == pytest.approx(report.em1_overall)
    assert written.loc_acc == report.loc_acc

    lines = filesystem.read(
        os.path.join(run_dir, evaluator.PREDICTIONS_FILENAME)).splitlines()
    assert len(lines) == len(tiny_dataset.val)
    record = json.loads(lines[0])
    assert list(record) == [
        'episode_id', 'scene_id', 'answer', 'predicted_answer', 'position',
        'yaw'
    ]
    assert record['episode_id'] == tiny_dataset.val[0].episode_id


def test_evaluate_is_deterministic(tiny_config, tiny_dataset):
    """Tests that evaluating twice writes the same report bytes."""
    run_dir = tiny_config['output_dir']
    trainer.train(tiny_config, run_dir)
    report_path = os.path.join(run_dir, evaluator.REPORT_FILENAME)
    evaluator.evaluate(tiny_config, run_dir)
    first = filesystem.read(report_path)
    evaluator.evaluate(tiny_config, run_dir)
    assert filesystem.read(report_path) == first


def test_evaluate_writes_random_baseline_and_plots(tiny_config, tiny_dataset,
                                                   model, tmp_path):
    """Tests the chance-level report and the threshold plots written next to
    the model report."""
    output_dir = str(tmp_path / 'eval')
    evaluator.evaluate_and_write(tiny_config, model, tiny_dataset, output_dir,
                                 'full', 0)
    chance, header = report_lib.read_report(
        os.path.join(output_dir, evaluator.RANDOM_REPORT_FILENAME))
    assert header['mode'] == 'random'
    assert chance.counts['episodes'] == len(tiny_dataset.val)
    assert 0.0 <= chance.em1_overall <= 1.0
    for filename in evaluator.THRESHOLD_PLOT_FILENAMES.values():
        document = filesystem.read(os.path.join(output_dir, filename))
        assert '<svg' in document


def test_random_baseline_is_deterministic(tiny_dataset):
    """Tests that the chance-level report depends only on the seed."""
    first = evaluator.random_baseline(tiny_dataset, tiny_dataset.val, 3)
    second = evaluator.random_baseline(tiny_dataset, tiny_dataset.val, 3)
    assert first == second
