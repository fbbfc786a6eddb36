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
"""Runs the pilot and ablation grid: every mode and seed, optionally crossed
with token count, voxel size and rotation representation overrides."""
import collections
import itertools
import os

import numpy as np
import pandas as pd

from analysis import baselines
from analysis import plotting
from analysis import report as report_lib
from analysis import stat_tests
from common import filesystem
from common import logs
from common import utils
from common import yaml_utils
from experiment import config as config_lib
from experiment import dataset as dataset_lib
from experiment import evaluator
from experiment import trainer

ABLATION_DIR = 'ablation'
TABLE_FILENAME = 'ablation.csv'
SUMMARY_FILENAME = 'ablation.yaml'
BAR_PLOT_FILENAME = 'ablation_em1.svg'
BASE_VARIANT = 'base'
TESTED_METRICS = ('em1', 'loc_acc@1m')

logger = logs.Logger('ablation')

AblationCell = collections.namedtuple(
    'AblationCell',
    ['config', 'dataset_dir', 'output_dir', 'mode', 'seed', 'variant'])


def variants(config):
    """Returns [(label, {config path: value})] for the override grid of the
    ablation section. Without axes the grid is the base config alone."""
    axes = [(name, path, config['ablation'][name])
            for name, path in config_lib.ABLATION_AXES.items()
            if config['ablation'][name]]
    if not axes:
        return [(BASE_VARIANT, {})]
    grid = []
    names, paths, axis_values = zip(*axes)
    for values in itertools.product(*axis_values):
        label = ','.join(
            '%s=%s' % (name, value) for name, value in zip(names, values))
        grid.append((label, dict(zip(paths, values))))
    return grid


def group_label(mode, variant):
    """Row label of a (mode, variant) cell."""
    if variant == BASE_VARIANT:
        return mode
    return '%s/%s' % (mode, variant)


def run_cell(cell):
    """Trains and evaluates one (mode, seed, variant) cell. Returns its run
    table row."""
    dataset = dataset_lib.load_dataset(cell.dataset_dir)
    result = trainer.train_on(cell.config, dataset, cell.output_dir, cell.mode,
                              cell.seed)
    report, _ = evaluator.evaluate_and_write(cell.config, result.model,
                                             dataset, cell.output_dir,
                                             cell.mode, cell.seed)
    row = collections.OrderedDict([
        ('group', group_label(cell.mode, cell.variant)),
        ('mode', cell.mode),
        ('variant', cell.variant),
        ('seed', cell.seed),
    ])
    row.update(report_lib.report_to_row(report))
    return row


def ablation_cells(config, run_dir, modes=None, seeds=None):
    """Every cell of the grid, mode-major."""
    modes = config['modes'] if modes is None else modes
    seeds = config['seeds'] if seeds is None else seeds
    cells = []
    for variant, overrides in variants(config):
        cell_config = config_lib.with_overrides(config, overrides)
        for mode in modes:
            for seed in seeds:
                output_dir = os.path.join(run_dir, ABLATION_DIR,
                                          group_label(mode, variant).replace(
                                              '/', '_'), 'seed%d' % seed)
                cells.append(
                    AblationCell(cell_config,
                                 dataset_lib.dataset_dir(run_dir), output_dir,
                                 mode, seed, variant))
    return cells


def random_baseline_rows(run_dir, seeds):
    """Run table rows of the random baseline on the validation split, one per
    seed, as the evaluator scores it next to each cell."""
    dataset = dataset_lib.load_dataset(dataset_lib.dataset_dir(run_dir))
    rows = []
    for seed in seeds:
        row = collections.OrderedDict([
            ('group', baselines.RANDOM_BASELINE),
            ('mode', baselines.RANDOM_BASELINE),
            ('variant', BASE_VARIANT),
            ('seed', seed),
        ])
        row.update(
            report_lib.report_to_row(
                evaluator.random_baseline(dataset, dataset.val, seed)))
        rows.append(row)
    return rows


def _p_value_or_none(value):
    return None if np.isnan(value) else float(value)


def _kruskal_or_none(runs_df, metric):
    try:
        return _p_value_or_none(
            stat_tests.kruskal_test(runs_df, metric, 'group'))
    except ValueError:
        # All measurements equal.
        return None


def _p_values_to_dict(table):
    return {
        str(row): {
            str(column): _p_value_or_none(value)
            for column, value in table.loc[row].items()
        } for row in table.index
    }


def summarize(runs_df):
    """Mean and sd per group, a Kruskal-Wallis p-value across groups and
    pairwise U-test p-values. In the one-sided table a small p-value means
    the row group scores higher than the column group."""
    summary = report_lib.summarize_reports(runs_df, group_columns=('group',))
    kruskal, u_tests, greater_u_tests = {}, {}, {}
    for metric in TESTED_METRICS:
        if metric not in runs_df.columns:
            continue
        kruskal[metric] = _kruskal_or_none(runs_df, metric)
        u_tests[metric] = _p_values_to_dict(
            stat_tests.two_sided_u_test(runs_df, metric, 'group'))
        greater_u_tests[metric] = _p_values_to_dict(
            stat_tests.one_sided_u_test(runs_df, metric, 'group'))
    return summary, {
        'summary': report_lib.summary_to_dict(summary),
        'kruskal': kruskal,
        'u_tests': u_tests,
        'greater_u_tests': greater_u_tests,
    }


def run_ablation_suite(config, run_dir, modes=None, seeds=None):
    """Runs every cell on the dataset of |run_dir| and writes ablation.csv,
    ablation.yaml and a bar plot of EM@1. The table ends with one random
    baseline row per seed. Returns the run table."""
    cells = ablation_cells(config, run_dir, modes, seeds)
    logger.info('Running %d ablation cells with %d workers.', len(cells),
                config['workers'])
    rows = utils.parallel_map(run_cell, cells, config['workers'])
    rows.extend(
        random_baseline_rows(run_dir,
                             config['seeds'] if seeds is None else seeds))
    runs_df = pd.DataFrame(rows)

    filesystem.write_atomic(os.path.join(run_dir, TABLE_FILENAME),
                            runs_df.to_csv(index=False))
    summary, summary_data = summarize(runs_df)
    yaml_utils.write(os.path.join(run_dir, SUMMARY_FILENAME), summary_data)
    plotting.Plotter(runs_df['group'].unique()).write_ablation_bar_plot(
        summary, os.path.join(run_dir, BAR_PLOT_FILENAME))
    return runs_df
