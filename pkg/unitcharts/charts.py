#!/usr/bin/env python3

"""Two-sided Shewhart and EWMA control charts."""

import dataclasses
import itertools
import logging
import math
from typing import Any, Optional, Sequence, Union

import numpy as np

from . import models
from . import utils

logger = logging.getLogger(__name__)


def _check_limits(lcl: float, cl: float, ucl: float):
    if not lcl < cl < ucl:
        raise utils.DomainError(
            f"Control limits must satisfy lcl < cl < ucl, got "
            f"({lcl}, {cl}, {ucl})")


@dataclasses.dataclass(frozen=True)
class ShewhartChart:
    """Shewhart chart with equal-tail probability limits."""

    lcl: float
    ucl: float
    cl: float
    alpha: float

    def __post_init__(self):
        _check_limits(self.lcl, self.cl, self.ucl)
        if not 0.0 < self.alpha < 1.0:
            raise utils.DomainError(f"alpha must lie in (0, 1), got "
                                    f"{self.alpha}")

    @property
    def lam(self) -> float:
        """Get the smoothing weight, the raw series being plotted."""
        return 1.0

    def statistic_path(self, series: np.ndarray,
                       start: Optional[float] = None) -> np.ndarray:
        """Get the plotted statistics of a series."""
        # pylint: disable=unused-argument
        return np.asarray(series, dtype=float)

    def describe(self) -> dict[str, Any]:
        """Export chart as a dictionary."""
        return {'type': 'shewhart', 'alpha': self.alpha, 'lcl': self.lcl,
                'cl': self.cl, 'ucl': self.ucl}


@dataclasses.dataclass(frozen=True)
class EwmaChart:
    """EWMA chart with steady-state limits cl +/- L sigma0x sqrt(lam/(2-lam)).

    The statistic starts at Z0 = cl for every monitored series.
    """

    lam: float
    L: float  # pylint: disable=invalid-name
    lcl: float
    ucl: float
    cl: float
    sigma0x: float

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise utils.DomainError(f"lambda must lie in (0, 1], got "
                                    f"{self.lam}")
        if not (self.L > 0 and self.sigma0x > 0):
            raise utils.DomainError("L and sigma0x must be positive")
        _check_limits(self.lcl, self.cl, self.ucl)

    @property
    def half_width(self) -> float:
        """Get the distance between the center line and a limit."""
        return self.ucl - self.cl

    def statistic_path(self, series: np.ndarray,
                       start: Optional[float] = None) -> np.ndarray:
        """Get the EWMA path Z_1..Z_n, from Z_0 = start or cl."""
        lam = self.lam
        z0 = self.cl if start is None else start
        steps = itertools.accumulate(
            series, lambda z, x: ewma_update(z, x, lam), initial=z0)
        next(steps)
        return np.fromiter(steps, dtype=float, count=len(series))

    def describe(self) -> dict[str, Any]:
        """Export chart as a dictionary."""
        return {'type': 'ewma', 'lambda': self.lam, 'L': self.L,
                'lcl': self.lcl, 'cl': self.cl, 'ucl': self.ucl,
                'sigma0x': self.sigma0x}


Chart = Union[ShewhartChart, EwmaChart]


@dataclasses.dataclass(frozen=True)
class MonitorResult:
    """Plotted statistics of a series and its first signal, if any."""

    statistic_path: tuple[float, ...]
    signal_index: Optional[int]
    signaled: bool

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return {'signaled': self.signaled, 'signal_index': self.signal_index,
                'statistic_path': list(self.statistic_path)}


def shewhart_limits(model: models.UnitModel,
                    alpha: float = 0.0027) -> ShewhartChart:
    """Get the equal-tail probability Shewhart chart of an IC model."""
    if not 0.0 < alpha < 1.0:
        raise utils.DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return ShewhartChart(lcl=model.quantile(alpha / 2.0),
                         ucl=model.quantile(1.0 - alpha / 2.0),
                         cl=model.mean(), alpha=alpha)


def ewma_limits(model: models.UnitModel, lam: float,
                L: float) -> EwmaChart:  # pylint: disable=invalid-name
    """Get the steady-state EWMA chart of an IC model."""
    if not 0.0 < lam <= 1.0:
        raise utils.DomainError(f"lambda must lie in (0, 1], got {lam}")
    if not L > 0:
        raise utils.DomainError(f"L must be positive, got {L}")
    cl = model.mean()
    sigma0x = model.std_dev()
    half = L * sigma0x * math.sqrt(lam / (2.0 - lam))
    if cl - half <= 0.0 or cl + half >= 1.0:
        logger.debug("EWMA limits of %s (lambda=%s, L=%s) reach past the "
                     "unit interval", model, lam, L)
    return EwmaChart(lam=lam, L=L, lcl=cl - half, ucl=cl + half, cl=cl,
                     sigma0x=sigma0x)


def ewma_update(z_prev: float, x: float, lam: float) -> float:
    """Get Z_t = lam X_t + (1 - lam) Z_{t-1}."""
    return lam * x + (1.0 - lam) * z_prev


def first_signal(chart: Chart, path: np.ndarray) -> Optional[int]:
    """Get the 0-based index of the first statistic outside the limits."""
    outside = np.flatnonzero((path < chart.lcl) | (path > chart.ucl))
    if outside.size == 0:
        return None
    return int(outside[0])


def monitor(chart: Chart, series: Sequence[float],
            early_exit: bool = False) -> MonitorResult:
    """Run a chart over a series and report the first signal (1-based).

    Points lying exactly on a limit are in control. With early_exit, the
    path stops at the signaling point.
    """
    data = models.check_data(series)
    if data.size == 0:
        raise utils.DomainError("Cannot monitor an empty series")

    path = chart.statistic_path(data)
    index = first_signal(chart, path)
    if index is None:
        return MonitorResult(tuple(path.tolist()), None, False)

    if early_exit:
        path = path[:index + 1]
    return MonitorResult(tuple(path.tolist()), index + 1, True)
