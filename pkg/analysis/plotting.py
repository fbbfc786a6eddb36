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
"""Plotting functions."""

import matplotlib
import matplotlib.pyplot as plt

LOSS_COMPONENTS = ('total', 'situation', 'qa')

# Fixed ids and no timestamp, so the same data gives the same file.
matplotlib.rcParams['svg.hashsalt'] = 'sitbench'
_SVG_METADATA = {'Date': None}


class Plotter:
    """Plotter that uses the same color for the same mode."""
    # Tableau 10 colors.
    _COLOR_PALETTE = [
        '#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd', '#8c564b',
        '#e377c2', '#7f7f7f', '#bcbd22', '#17becf'
    ]

    def __init__(self, modes=()):
        """Instantiates plotter with list of |modes|."""
        self._mode_colors = {
            mode: self._COLOR_PALETTE[idx % len(self._COLOR_PALETTE)]
            for idx, mode in enumerate(sorted(modes))
        }

    def _color(self, mode):
        if mode not in self._mode_colors:
            self._mode_colors[mode] = self._COLOR_PALETTE[
                len(self._mode_colors) % len(self._COLOR_PALETTE)]
        return self._mode_colors[mode]

    # pylint: disable=no-self-use
    def _write_plot_to_image(self,
                             plot_function,
                             data,
                             image_path,
                             wide=False,
                             **kwargs):
        """Writes the result of |plot_function(data)| to |image_path|.

        If |wide|, then the image size will be twice as wide as normal.
        """
        width = 6.4
        height = 4.8
        figsize = (2 * width, height) if wide else (width, height)
        fig, axes = plt.subplots(figsize=figsize)
        try:
            plot_function(data, axes=axes, **kwargs)
            fig.savefig(image_path,
                        bbox_inches='tight',
                        format='svg',
                        metadata=_SVG_METADATA)
        finally:
            plt.close(fig)

    def loss_curve_plot(self, train_log_df, axes=None):
        """Draws mean loss per epoch for every loss component in
        |train_log_df| (columns epoch, total, situation, qa)."""
        per_epoch = train_log_df.groupby('epoch')[list(LOSS_COMPONENTS)].mean()
        for component in LOSS_COMPONENTS:
            axes.plot(per_epoch.index,
                      per_epoch[component],
                      marker='o',
                      label=component)
        axes.set(xlabel='Epoch', ylabel='Mean episode loss')
        axes.legend(frameon=False)
        axes.spines['top'].set_visible(False)
        axes.spines['right'].set_visible(False)

    def write_loss_curve_plot(self, train_log_df, image_path):
        """Writes loss curve plot."""
        self._write_plot_to_image(self.loss_curve_plot, train_log_df,
                                  image_path)

    def threshold_plot(self, reports, axes=None, field='loc_acc'):
        """Draws accuracy against threshold for each (mode, MetricsReport)
        in |reports|."""
        for mode, report in reports:
            curve = getattr(report, field)
            thresholds = sorted(curve)
            axes.plot(thresholds,
                      [curve[threshold] for threshold in thresholds],
                      marker='o',
                      color=self._color(mode),
                      label=mode)
        unit = 'm' if field == 'loc_acc' else 'degrees'
        axes.set(xlabel='Threshold (%s)' % unit, ylabel='Accuracy')
        axes.set_ylim(0.0, 1.0)
        axes.legend(frameon=False)

    def write_threshold_plot(self, reports, image_path, field='loc_acc'):
        """Writes accuracy-threshold plot."""
        self._write_plot_to_image(self.threshold_plot,
                                  reports,
                                  image_path,
                                  field=field)

    def ablation_bar_plot(self, summary_df, axes=None, metric='em1'):
        """Draws mean +/- sd of |metric| for each row of a summary table."""
        labels = [str(label) for label in summary_df.index]
        axes.bar(labels,
                 summary_df['%s mean' % metric],
                 yerr=summary_df['%s sd' % metric],
                 color=[self._color(label) for label in labels],
                 capsize=4)
        axes.set(ylabel=metric)
        axes.set_xticks(range(len(labels)))
        axes.set_xticklabels(labels, rotation=30, horizontalalignment='right')

    def write_ablation_bar_plot(self, summary_df, image_path, metric='em1'):
        """Writes ablation bar plot."""
        self._write_plot_to_image(self.ablation_bar_plot,
                                  summary_df,
                                  image_path,
                                  wide=True,
                                  metric=metric)
