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
"""Metrics report files and run tables.

A report file is YAML with the fields, in order:

  header          run identification (mode, seed, ...), may be empty
  loc_acc         {threshold in meters: fraction}
  rot_acc         {threshold in degrees: fraction}
  em1_overall     fraction
  em1_by_type     {first word of the question: fraction}
  em1_by_family   {question family: fraction}
  counts          {episodes, by_type, by_family, unknown_answers}
"""
import pandas as pd

from analysis import metrics
from common import yaml_utils

REPORT_FIELDS = metrics.MetricsReport._fields
FAMILY_COLUMN_PREFIX = 'em1/family/'


def _int_values(mapping):
    return {key: int(value) for key, value in mapping.items()}


def report_to_dict(report, header=None):
    """Returns |report| as plain data with a fixed field order."""
    data = {'header': dict(header or {})}
    data['loc_acc'] = {
        float(threshold): float(value)
        for threshold, value in report.loc_acc.items()
    }
    data['rot_acc'] = {
        float(threshold): float(value)
        for threshold, value in report.rot_acc.items()
    }
    data['em1_overall'] = float(report.em1_overall)
    data['em1_by_type'] = {
        key: float(value) for key, value in report.em1_by_type.items()
    }
    data['em1_by_family'] = {
        key: float(value) for key, value in report.em1_by_family.items()
    }
    counts = report.counts
    data['counts'] = {
        'episodes': int(counts['episodes']),
        'by_type': _int_values(counts['by_type']),
        'by_family': _int_values(counts['by_family']),
        'unknown_answers': int(counts['unknown_answers']),
    }
    return data


def report_from_dict(data):
    """Inverse of report_to_dict. Returns (MetricsReport, header)."""
    missing = [field for field in REPORT_FIELDS if field not in data]
    if missing:
        raise ValueError('Report is missing fields: %s.' % ', '.join(missing))
    report = metrics.MetricsReport(
        *[data[field] for field in REPORT_FIELDS])
    return report, data.get('header', {})


def write_report(path, report, header=None):
    """Atomically writes |report| as YAML."""
    yaml_utils.write(path, report_to_dict(report, header))


def read_report(path):
    """Reads a report file. Returns (MetricsReport, header)."""
    return report_from_dict(yaml_utils.read(path))


def report_to_row(report):
    """Flattens |report| into the metric columns of a run table."""
    row = {}
    for threshold, value in report.loc_acc.items():
        row['loc_acc@%gm' % threshold] = value
    for threshold, value in report.rot_acc.items():
        row['rot_acc@%gdeg' % threshold] = value
    row['em1'] = report.em1_overall
    for key, value in report.em1_by_type.items():
        row['em1/%s' % key] = value
    for key, value in report.em1_by_family.items():
        row[FAMILY_COLUMN_PREFIX + key] = value
    return row


def metric_columns(runs_df):
    """Metric columns of a run table, in table order."""
    return [
        column for column in runs_df.columns
        if column.startswith(('loc_acc', 'rot_acc', 'em1'))
    ]


def family_breakdown(runs_df, group_column='mode'):
    """Mean EM@1 per question family for each |group_column| value."""
    columns = [
        column for column in runs_df.columns
        if column.startswith(FAMILY_COLUMN_PREFIX)
    ]
    breakdown = runs_df.groupby(group_column, sort=False)[columns].mean()
    return breakdown.rename(
        columns=lambda column: column[len(FAMILY_COLUMN_PREFIX):])


def summarize_reports(runs_df, group_columns=('mode',)):
    """Mean and sample standard deviation of every metric across seeds.

    Returns a data frame indexed by |group_columns| whose columns are
    '<metric> mean' and '<metric> sd'. A single seed has sd 0."""
    columns = metric_columns(runs_df)
    groups = runs_df.groupby(list(group_columns), sort=False)[columns]
    means = groups.mean()
    deviations = groups.std().fillna(0.0)
    summary = pd.concat([means.add_suffix(' mean'),
                         deviations.add_suffix(' sd')],
                        axis=1)
    ordered = [
        '%s %s' % (column, statistic)
        for column in columns
        for statistic in ('mean', 'sd')
    ]
    return summary[ordered]


def summary_to_dict(summary):
    """Returns {group: {metric: {'mean', 'sd'}}} for YAML output."""
    data = {}
    for group, row in summary.iterrows():
        if isinstance(group, tuple):
            key = '/'.join(str(part) for part in group)
        else:
            key = str(group)
        metrics_data = {}
        for column in row.index:
            metric, statistic = column.rsplit(' ', 1)
            metrics_data.setdefault(metric, {})[statistic] = float(row[column])
        data[key] = metrics_data
    return data
