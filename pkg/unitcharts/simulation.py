#!/usr/bin/env python3

"""Run-length estimation, L calibration and robustness study.

Replication i of any estimate always draws from the substream (seed, i),
a Philox generator keyed by SeedSequence([seed, i]). Results therefore do
not depend on the number of workers, and two charts evaluated with the same
seed see the same observations (common random numbers).
"""

import concurrent.futures
import dataclasses
import logging
import math
from typing import Any, Optional, Sequence

import numpy as np

from . import charts
from . import models
from . import utils

logger = logging.getLogger(__name__)

BLOCK_SIZE = 256
FIRST_CHUNK = 64
MAX_CHUNK = 65536

CENSORED_WARN_FRACTION = 0.01
CENSORED_FAIL_FRACTION = 0.5

# Upper end of the coarse L scan.
L_MAX = 6.0
L_COARSE_STEP = 0.5


@dataclasses.dataclass(frozen=True)
class DesignConfig:
    """Monte-Carlo design settings."""

    # pylint: disable=too-many-instance-attributes

    arl0: float = 370.4
    xi: float = 4.0
    n_runs: int = 10000
    seed: int = 0
    rl_cap: int = 5_000_000
    l_grid: float = 0.001
    workers: int = 1
    # Count the EWMA starting value Z0 as the first plotted point.
    count_start: bool = False

    def __post_init__(self):
        if not self.arl0 > 1:
            raise utils.DomainError(f"arl0 must exceed 1, got {self.arl0}")
        if not self.xi > 0:
            raise utils.DomainError(f"xi must be positive, got {self.xi}")
        if self.n_runs < 1:
            raise utils.DomainError(f"n_runs must be >= 1, got "
                                    f"{self.n_runs}")
        if not 0 <= self.seed < 2 ** 64:
            raise utils.DomainError(f"seed must be a 64-bit unsigned "
                                    f"integer, got {self.seed}")
        if not self.rl_cap > self.arl0 * 100:
            raise utils.DomainError(
                f"rl_cap ({self.rl_cap}) must exceed 100 * arl0")
        if not self.l_grid > 0:
            raise utils.DomainError(f"l_grid must be positive, got "
                                    f"{self.l_grid}")
        if self.workers < 1:
            raise utils.DomainError(f"workers must be >= 1, got "
                                    f"{self.workers}")

    def replace(self, **changes) -> 'DesignConfig':
        """Get a copy with some settings changed."""
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class RunLengthSummary:
    """Run-length distribution summary.

    With censored replications, arl is a lower bound.
    """

    # pylint: disable=too-many-instance-attributes

    arl: float
    sdrl: float
    mrl: float
    n_runs: int
    se_arl: float
    censored: int = 0
    warnings: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        data = dataclasses.asdict(self)
        data['warnings'] = list(self.warnings)
        return data


@dataclasses.dataclass(frozen=True)
class ShiftProfile:
    """Mean shifts mu1 = mu0 + delta, dispersion held at its IC value."""

    mu0: float
    deltas: tuple[float, ...]

    def __post_init__(self):
        for mu1 in self.mu1_values:
            if not 0.0 < mu1 < 1.0:
                raise utils.DomainError(
                    f"Shifted mean {mu1} is outside (0, 1)")

    @classmethod
    def from_means(cls, mu0: float, mu1_values: Sequence[float]
                   ) -> 'ShiftProfile':
        """Create a profile from OOC means."""
        return cls(mu0, tuple(round(mu1 - mu0, 12) for mu1 in mu1_values))

    @property
    def mu1_values(self) -> list[float]:
        """Get the shifted means."""
        return [round(self.mu0 + delta, 12) for delta in self.deltas]


@dataclasses.dataclass(frozen=True)
class RobustnessCell:
    """Run lengths of a chart built on one model, data from another."""

    true_model: models.UnitModel
    limits_model: models.UnitModel
    lam: float
    chart: charts.EwmaChart
    summary: RunLengthSummary
    profile: tuple[tuple[float, RunLengthSummary], ...]

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return {'true_model': self.true_model.describe(),
                'limits_model': self.limits_model.describe(),
                'lambda': self.lam,
                'chart': self.chart.describe(),
                'in_control': self.summary.as_dict(),
                'profile': [{'mu1': mu1, **summary.as_dict()}
                            for mu1, summary in self.profile]}


def replication_stream(seed: int, index: int) -> np.random.Generator:
    """Get the random stream owned by replication index."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, index])))


def p_out(model: models.UnitModel, lcl: float, ucl: float) -> float:
    """Get the probability for one observation to fall outside [lcl, ucl]."""
    if not lcl < ucl:
        raise utils.DomainError(f"Invalid limits ({lcl}, {ucl})")
    below = model.cdf(lcl) if lcl > 0.0 else 0.0
    above = 1.0 - model.cdf(ucl) if ucl < 1.0 else 0.0
    return below + above


def shewhart_rl_exact(p: float) -> RunLengthSummary:
    """Get the geometric run-length summary of a Shewhart chart."""
    if not 0.0 < p <= 1.0:
        raise utils.DomainError(f"p must lie in (0, 1], got {p}")
    if p == 1.0:
        mrl = 1
    else:
        mrl = max(1, math.ceil(math.log(0.5) / math.log1p(-p)))
    return RunLengthSummary(arl=1.0 / p, sdrl=math.sqrt(1.0 - p) / p,
                            mrl=float(mrl), n_runs=0, se_arl=0.0)


def simulate_run_length(chart: charts.Chart, model: models.UnitModel,
                        stream: np.random.Generator, rl_cap: int) -> int:
    """Get the number of observations until the chart first signals.

    Observations are drawn in doubling chunks, so that a given stream
    yields the same observations whatever the chart limits. A replication
    without signal within rl_cap observations returns rl_cap + 1.
    """
    drawn = 0
    z = chart.cl
    chunk = FIRST_CHUNK
    while drawn < rl_cap:
        size = min(chunk, rl_cap - drawn)
        path = chart.statistic_path(model.sample(stream, size), z)
        index = charts.first_signal(chart, path)
        if index is not None:
            return drawn + index + 1
        drawn += size
        z = float(path[-1])
        chunk = min(2 * chunk, MAX_CHUNK)
    return rl_cap + 1


def _simulate_block(chart: charts.Chart, model: models.UnitModel, seed: int,
                    start: int, stop: int, rl_cap: int) -> np.ndarray:
    return np.array([simulate_run_length(chart, model,
                                         replication_stream(seed, index),
                                         rl_cap)
                     for index in range(start, stop)], dtype=np.int64)


def run_lengths(chart: charts.Chart, model: models.UnitModel,
                config: DesignConfig) -> np.ndarray:
    """Get the run length of every replication, in replication order."""
    blocks = [(start, min(start + BLOCK_SIZE, config.n_runs))
              for start in range(0, config.n_runs, BLOCK_SIZE)]
    lengths = np.empty(config.n_runs, dtype=np.int64)

    if config.workers == 1:
        for start, stop in blocks:
            lengths[start:stop] = _simulate_block(chart, model, config.seed,
                                                  start, stop, config.rl_cap)
        return lengths

    with concurrent.futures.ProcessPoolExecutor(
            max_workers=config.workers) as executor:
        jobs = {executor.submit(_simulate_block, chart, model, config.seed,
                                start, stop, config.rl_cap): (start, stop)
                for start, stop in blocks}
        try:
            for future in concurrent.futures.as_completed(jobs):
                start, stop = jobs[future]
                lengths[start:stop] = future.result()
        except BaseException:
            executor.shutdown(cancel_futures=True)
            raise

    return lengths


def summarize(lengths: np.ndarray, rl_cap: int,
              offset: int = 0) -> RunLengthSummary:
    """Get the summary of simulated run lengths.

    Lengths above rl_cap are censored replications. offset is added to
    every length before summarizing. Raise EstimationError when more than
    half of them are censored.
    """
    n = lengths.size
    censored = int(np.count_nonzero(lengths > rl_cap))
    if censored > CENSORED_FAIL_FRACTION * n:
        raise utils.EstimationError(
            f"{censored} of {n} replications reached the run-length cap "
            f"({rl_cap})")

    warnings = []
    if censored > CENSORED_WARN_FRACTION * n:
        message = f"{censored} of {n} replications censored at {rl_cap}, " \
                  f"ARL is a lower bound"
        logger.warning(message)
        warnings.append(message)

    lengths = lengths + offset
    sdrl = float(np.std(lengths, ddof=1)) if n > 1 else 0.0
    return RunLengthSummary(arl=float(np.mean(lengths)), sdrl=sdrl,
                            mrl=float(np.median(lengths)), n_runs=n,
                            se_arl=sdrl / math.sqrt(n), censored=censored,
                            warnings=tuple(warnings))


def estimate_rl(chart: charts.Chart, model: models.UnitModel,
                config: DesignConfig) -> RunLengthSummary:
    """Estimate ARL, SDRL and MRL of a chart on data from model.

    With config.count_start, EWMA run lengths also count the starting
    value, the convention of the published EWMA tables.
    """
    offset = int(config.count_start and isinstance(chart, charts.EwmaChart))
    return summarize(run_lengths(chart, model, config), config.rl_cap, offset)


class _LatticeSearch:
    """IC ARL of EWMA charts on the L = k * l_grid lattice, memoized."""

    def __init__(self, model: models.UnitModel, lam: float,
                 config: DesignConfig):
        self.model = model
        self.lam = lam
        self.config = config
        self.results: dict[int, RunLengthSummary] = {}

    def value(self, k: int) -> float:
        """Get the L value of a lattice index."""
        return round(k * self.config.l_grid, 12)

    def arl(self, k: int) -> RunLengthSummary:
        """Get the IC run-length summary at lattice index k."""
        if k not in self.results:
            chart = charts.ewma_limits(self.model, self.lam, self.value(k))
            summary = estimate_rl(chart, self.model, self.config)
            logger.debug("L=%.4f: ARL %.2f (se %.2f)", self.value(k),
                         summary.arl, summary.se_arl)
            self.results[k] = summary
        return self.results[k]


def calibrate_l(model: models.UnitModel, lam: float,
                config: DesignConfig) -> tuple[float, RunLengthSummary]:
    """Find the EWMA limit multiplier L reaching the target IC ARL.

    The result is the smallest lattice L whose IC ARL exceeds
    arl0 - xi. The IC ARL is nondecreasing in L under common random
    numbers, so a coarse scan followed by bisection finds it.
    """
    search = _LatticeSearch(model, lam, config)
    low_target = config.arl0 - config.xi

    step = max(1, round(L_COARSE_STEP / config.l_grid))
    k_max = round(L_MAX / config.l_grid)
    k_lo = 0
    k_hi = None
    for k in range(step, k_max + 1, step):
        if search.arl(k).arl > low_target:
            k_hi = k
            break
        k_lo = k
    if k_hi is None:
        raise utils.DesignError(
            f"IC ARL of {model} with lambda={lam} stays below "
            f"{low_target} up to L={L_MAX}")
    logger.info("L bracket for %s, lambda=%s: [%s, %s]", model, lam,
                search.value(k_lo), search.value(k_hi))

    while k_hi - k_lo > 1:
        mid = (k_lo + k_hi) // 2
        if search.arl(mid).arl > low_target:
            k_hi = mid
        else:
            k_lo = mid

    best = k_hi
    summary = search.arl(best)
    if summary.arl >= config.arl0 + config.xi:
        if k_lo > 0 and (abs(search.arl(k_lo).arl - config.arl0)
                         < abs(summary.arl - config.arl0)):
            best = k_lo
        message = f"No lattice L gives an IC ARL within {config.xi} of " \
                  f"{config.arl0}; L={search.value(best)} gives " \
                  f"{search.arl(best).arl:.2f}"
        logger.warning(message)
        summary = dataclasses.replace(
            search.arl(best), warnings=search.arl(best).warnings + (message,))

    logger.info("Calibrated L=%s for %s, lambda=%s: IC ARL %.2f (se %.2f)",
                search.value(best), model, lam, summary.arl, summary.se_arl)
    return search.value(best), summary


def ooc_profile(chart: charts.Chart, model: models.UnitModel,
                shift_profile: ShiftProfile, config: DesignConfig
                ) -> list[tuple[float, RunLengthSummary]]:
    """Estimate run lengths of a chart across a profile of mean shifts.

    model gives the family and dispersion of the data, its mean being
    replaced by every shifted mean in turn.
    """
    if abs(model.mu - shift_profile.mu0) > 1e-12:
        raise utils.DomainError(
            f"Profile mu0 {shift_profile.mu0} differs from model mean "
            f"{model.mu}")

    results = []
    for mu1 in shift_profile.mu1_values:
        summary = estimate_rl(chart, model.with_mean(mu1), config)
        logger.debug("%s at mu1=%s: ARL %.2f", model.family.display_name, mu1,
                     summary.arl)
        results.append((mu1, summary))
    return results


def robustness_matrix(case_models: Sequence[models.UnitModel], lam: float,
                      config: DesignConfig, shift_profile: ShiftProfile,
                      l_values: Optional[dict[models.Family, float]] = None
                      ) -> list[RobustnessCell]:
    """Cross every true model with the limits of every model.

    Cells are ordered by true model, then limits model. L values missing
    from l_values are calibrated on the limits model.
    """
    mu0 = case_models[0].mu
    if any(abs(model.mu - mu0) > 1e-12 for model in case_models):
        raise utils.DomainError("Case models must share the same mean")
    l_values = dict(l_values or {})

    limit_charts = {}
    for limits_model in case_models:
        family = limits_model.family
        if family not in l_values:
            l_values[family], _ = calibrate_l(limits_model, lam, config)
        limit_charts[family] = charts.ewma_limits(limits_model, lam,
                                                  l_values[family])

    cells = []
    for true_model in case_models:
        for limits_model in case_models:
            chart = limit_charts[limits_model.family]
            logger.info("Robustness: %s data, %s limits, lambda=%s",
                        true_model.family.display_name,
                        limits_model.family.display_name, lam)
            profile = ooc_profile(chart, true_model, shift_profile, config)
            summary = next((s for mu1, s in profile
                            if abs(mu1 - mu0) < 1e-12), None)
            if summary is None:
                summary = estimate_rl(chart, true_model, config)
            cells.append(RobustnessCell(true_model, limits_model, lam, chart,
                                        summary, tuple(profile)))
    return cells
