#!/usr/bin/env python3

"""SVG rendering of control charts and fitted distribution functions."""

import dataclasses
import logging
import math
import pathlib
from typing import Any, Sequence

import matplotlib as mpl
import numpy as np

from . import charts
from . import inference
from . import utils

mpl.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402 pylint: disable=C0411,C0413

logger = logging.getLogger(__name__)

GOLDEN_RATIO = (math.sqrt(5) - 1.0) / 2.0
FIGURE_WIDTH = 7.0

mpl.rcParams.update({
    "axes.labelsize": 10,
    "font.size": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "unitcharts",
})


@dataclasses.dataclass(frozen=True)
class ChartPlotData:
    """Points, limit lines and signal markers of a monitored series."""

    # pylint: disable=too-many-instance-attributes

    title: str
    index: tuple[int, ...]
    points: tuple[float, ...]
    lcl: float
    ucl: float
    cl: float
    signals: tuple[int, ...]
    first_signal: int | None

    @classmethod
    def from_monitor(cls, title: str, chart: charts.Chart,
                     result: charts.MonitorResult,
                     first_index: int = 1) -> 'ChartPlotData':
        """Create plot data of a monitor result.

        first_index is the label of the first monitored point.
        """
        points = result.statistic_path
        index = tuple(range(first_index, first_index + len(points)))
        signals = tuple(i for i, z in zip(index, points)
                        if z < chart.lcl or z > chart.ucl)
        first = None
        if result.signal_index is not None:
            first = first_index + result.signal_index - 1
        return cls(title, index, points, chart.lcl, chart.ucl, chart.cl,
                   signals, first)

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        data = dataclasses.asdict(self)
        data['index'] = list(self.index)
        data['points'] = list(self.points)
        data['signals'] = list(self.signals)
        return data


def _new_figure():
    return plt.subplots(figsize=(FIGURE_WIDTH, FIGURE_WIDTH * GOLDEN_RATIO))


def _save(fig, path: pathlib.Path):
    try:
        fig.savefig(path, format='svg', bbox_inches='tight',
                    metadata={'Date': None})
    except OSError as err:
        raise utils.InputError(f"Cannot write {path}: {err}") from err
    finally:
        plt.close(fig)
    logger.info("Plot written to %s", path)


def save_chart(data: ChartPlotData, path: pathlib.Path):
    """Write a control chart as an SVG file."""
    fig, ax = _new_figure()
    ax.plot(data.index, data.points, marker='o', markersize=4, color='black',
            linewidth=1)
    for value, name, style in ((data.ucl, "UCL", '--'), (data.cl, "CL", '-'),
                               (data.lcl, "LCL", '--')):
        ax.axhline(value, linestyle=style, color='gray', linewidth=1)
        ax.annotate(f"{name} = {value:.4f}", xy=(1.0, value),
                    xycoords=('axes fraction', 'data'), xytext=(4, 0),
                    textcoords='offset points', va='center', fontsize=8)
    if data.signals:
        values = [z for i, z in zip(data.index, data.points)
                  if i in data.signals]
        ax.plot(data.signals, values, linestyle='none', marker='o',
                markersize=7, markerfacecolor='none', color='red',
                label="signal")
        ax.legend(loc='best')
    ax.set_xlabel("observation")
    ax.set_ylabel("statistic")
    ax.set_title(data.title)
    _save(fig, path)


def save_ecdf(data: Sequence[float], fits: Sequence[inference.FitReport],
              path: pathlib.Path):
    """Write the empirical distribution function against fitted ones."""
    x = np.sort(np.asarray(data, dtype=float))
    fig, ax = _new_figure()
    ax.step(x, np.arange(1, x.size + 1) / x.size, where='post',
            color='black', label="empirical")
    grid = np.linspace(max(x[0] - 0.1 * (x[-1] - x[0]), 1e-6),
                       min(x[-1] + 0.1 * (x[-1] - x[0]), 1.0 - 1e-6), 200)
    for fit in fits:
        ax.plot(grid, fit.model().cdf(grid), label=fit.family.display_name)
    ax.set_xlabel("x")
    ax.set_ylabel("F(x)")
    ax.legend(loc='best')
    _save(fig, path)
