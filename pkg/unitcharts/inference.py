#!/usr/bin/env python3

"""Phase I analysis: maximum-likelihood fits, model selection and tests."""

import concurrent.futures
import dataclasses
import enum
import logging
import math
from typing import Any, Sequence

import numpy as np
from scipy import stats

from . import models
from . import numerics
from . import simulation
from . import utils

logger = logging.getLogger(__name__)

N_PARAMS = 2
BOOTSTRAP_BLOCK = 50


class AdMethod(enum.StrEnum):
    """Anderson-Darling p-value method."""

    BOOTSTRAP = 'bootstrap'
    ASYMPTOTIC = 'asymptotic'


class RunsMethod(enum.StrEnum):
    """Runs test null distribution."""

    NORMAL = 'normal'
    EXACT = 'exact'
    AUTO = 'auto'


@dataclasses.dataclass(frozen=True)
class FitReport:
    """Maximum-likelihood fit of one family."""

    # pylint: disable=too-many-instance-attributes

    family: models.Family
    estimates: tuple[float, float]
    std_errors: tuple[float, float]
    loglik: float
    aic: float
    bic: float
    n: int

    def model(self) -> models.UnitModel:
        """Get the fitted model."""
        return self.family.model(*self.estimates)

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        name = self.family.dispersion_name
        return {'family': str(self.family), 'n': self.n,
                'mu': self.estimates[0], name: self.estimates[1],
                'se_mu': self.std_errors[0], f'se_{name}': self.std_errors[1],
                'loglik': self.loglik, 'aic': self.aic, 'bic': self.bic}


@dataclasses.dataclass(frozen=True)
class GofReport:
    """Goodness-of-fit statistics of a fitted model."""

    ad_stat: float
    ad_pvalue: float
    ks_stat: float
    ks_pvalue: float
    ad_method: AdMethod = AdMethod.BOOTSTRAP

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return {'ad_stat': self.ad_stat, 'ad_pvalue': self.ad_pvalue,
                'ad_method': str(self.ad_method),
                'ks_stat': self.ks_stat, 'ks_pvalue': self.ks_pvalue,
                'ks_method': 'asymptotic (parameters treated as known)'}


@dataclasses.dataclass(frozen=True)
class RunsTestReport:
    """Runs test for randomness about the median."""

    n_runs_observed: int
    n_above: int
    n_below: int
    pvalue: float
    method: RunsMethod = RunsMethod.NORMAL

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        data = dataclasses.asdict(self)
        data['method'] = str(self.method)
        return data


def _maximize(family: models.Family, data: np.ndarray
              ) -> tuple[np.ndarray, float]:
    def objective(eta):
        params = models.from_unconstrained(eta)
        return -models._log_likelihood(  # pylint: disable=protected-access
            family, params, data)

    start = models.start_values(family, data)
    attempts = [start, (start[0], start[1] * 4.0), (start[0], start[1] / 4.0)]
    diagnostics = {}
    for attempt in attempts:
        try:
            eta, value = numerics.minimize(
                objective, models.to_unconstrained(attempt))
        except (utils.NumericError, OverflowError) as err:
            logger.debug("%s fit from %s failed: %s", family.display_name,
                         attempt, err)
            diagnostics = {'start': attempt,
                           **getattr(err, 'diagnostics', {})}
            continue
        if value < -models.LOGLIK_SENTINEL / 2:
            return eta, -value

    raise utils.FitError(f"Maximum-likelihood fit of {family.display_name} "
                         f"did not converge", diagnostics)


def fit_mle(family: models.Family, data: Sequence[float]) -> FitReport:
    """Fit a family by maximum likelihood.

    Standard errors come from the inverse observed information on the
    (logit mu, log dispersion) scale, mapped back with the delta method.
    """
    arr = models.check_data(data)
    if arr.size < 3:
        raise utils.DomainError(f"At least 3 observations are needed to fit, "
                                f"got {arr.size}")

    eta, loglik = _maximize(family, arr)
    mu, dispersion = models.from_unconstrained(eta)

    def objective(point):
        return -models._log_likelihood(  # pylint: disable=protected-access
            family, models.from_unconstrained(point), arr)

    try:
        hessian = numerics.numeric_hessian(objective, eta)
        cov_eta = np.linalg.inv(hessian)
    except (utils.NumericError, np.linalg.LinAlgError) as err:
        raise utils.FitError(f"Information matrix of the "
                             f"{family.display_name} fit is not usable: {err}",
                             {'estimates': (mu, dispersion)}) from err
    jacobian = np.diag([mu * (1.0 - mu), dispersion])
    variances = np.diag(jacobian @ cov_eta @ jacobian)
    if not np.all(variances > 0):
        raise utils.FitError(f"Information matrix of the "
                             f"{family.display_name} fit is not positive "
                             "definite",
                             {'estimates': (mu, dispersion),
                              'hessian': hessian.tolist()})

    n = int(arr.size)
    logger.debug("%s fit: mu=%.6f %s=%.6f loglik=%.4f", family.display_name,
                 mu, family.dispersion_name, dispersion, loglik)
    return FitReport(family=family, estimates=(mu, dispersion),
                     std_errors=tuple(float(v) for v in np.sqrt(variances)),
                     loglik=loglik,
                     aic=-2.0 * loglik + 2.0 * N_PARAMS,
                     bic=-2.0 * loglik + N_PARAMS * math.log(n), n=n)


def select_model(reports: Sequence[FitReport]) -> list[FitReport]:
    """Rank fits by AIC, then BIC, then family order."""
    return sorted(reports, key=lambda r: (r.aic, r.bic, r.family.order))


def ks_statistic(data: Sequence[float], model: models.UnitModel) -> float:
    """Get the Kolmogorov-Smirnov distance of data to a model."""
    x = np.sort(models.check_data(data))
    n = x.size
    if n < 1:
        raise utils.StatTestError("KS test needs at least one observation")
    cdf = np.asarray(model.cdf(x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def ks_test(data: Sequence[float],
            model: models.UnitModel) -> tuple[float, float]:
    """Get the KS statistic and asymptotic p-value of data against model."""
    stat = ks_statistic(data, model)
    n = np.asarray(data).size
    return stat, float(stats.kstwobign.sf(math.sqrt(n) * stat))


def ad_statistic(data: Sequence[float], model: models.UnitModel) -> float:
    """Get the Anderson-Darling statistic A^2 of data against model."""
    x = np.sort(models.check_data(data))
    n = x.size
    if n < 2:
        raise utils.StatTestError("AD test needs at least two observations")
    cdf = np.asarray(model.cdf(x))
    bad = np.flatnonzero((cdf <= 0.0) | (cdf >= 1.0))
    if bad.size:
        raise utils.StatTestError(
            f"Fitted distribution function is numerically {cdf[bad[0]]:g} "
            f"at observation {x[bad[0]]}")
    i = np.arange(1, n + 1)
    total = np.sum((2 * i - 1) * (np.log(cdf) + np.log1p(-cdf[::-1])))
    return float(-n - total / n)


def _ad_inf(z: float) -> float:
    if z < 2.0:
        return (math.exp(-1.2337141 / z) / math.sqrt(z)
                * (2.00012 + (0.247105 - (0.0649821 - (0.0347962
                   - (0.011672 - 0.00168691 * z) * z) * z) * z) * z))
    return math.exp(-math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433
                    - (0.008056 - 0.0003146 * z) * z) * z) * z) * z))


def _ad_errfix(n: int, x: float) -> float:
    if x > 0.8:
        return (-130.2137 + (745.2337 - (1705.091 - (1950.646
                - (1116.360 - 255.7844 * x) * x) * x) * x) * x) / n
    c = 0.01265 + 0.1757 / n
    if x < c:
        t = x / c
        t = math.sqrt(t) * (1.0 - t) * (49.0 * t - 102.0)
        return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n
    x = (x - c) / (0.8 - c)
    x = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259
                       - 1.91864 * x) * x) * x) * x) * x
    return x * (0.04213 + 0.01365 / n) / n


def ad_asymptotic_pvalue(stat: float, n: int) -> float:
    """Get the fully-specified case AD p-value, finite-n corrected."""
    if stat <= 0.0:
        return 1.0
    cdf = _ad_inf(stat)
    cdf += _ad_errfix(n, cdf)
    return min(1.0, max(0.0, 1.0 - cdf))


def _bootstrap_block(model: models.UnitModel, n: int, seed: int, start: int,
                     stop: int) -> tuple[list[float], int]:
    boot_stats = []
    failures = 0
    for index in range(start, stop):
        stream = simulation.replication_stream(seed, index)
        sample = model.sample(stream, n)
        try:
            eta, _ = _maximize(model.family, sample)
            refit = model.family.model(*models.from_unconstrained(eta))
            boot_stats.append(ad_statistic(sample, refit))
        except (utils.FitError, utils.StatTestError, utils.DomainError):
            failures += 1
    return boot_stats, failures


def ad_bootstrap_pvalue(stat: float, model: models.UnitModel, n: int,
                        n_boot: int = 1000, seed: int = 0,
                        workers: int = 1) -> float:
    """Get the AD p-value by parametric bootstrap with refits."""
    blocks = [(start, min(start + BOOTSTRAP_BLOCK, n_boot))
              for start in range(0, n_boot, BOOTSTRAP_BLOCK)]
    boot_stats: list[float] = []
    failures = 0
    if workers == 1:
        for start, stop in blocks:
            block_stats, block_failures = _bootstrap_block(model, n, seed,
                                                           start, stop)
            boot_stats.extend(block_stats)
            failures += block_failures
    else:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers) as executor:
            jobs = [executor.submit(_bootstrap_block, model, n, seed, start,
                                    stop) for start, stop in blocks]
            try:
                for future in jobs:
                    block_stats, block_failures = future.result()
                    boot_stats.extend(block_stats)
                    failures += block_failures
            except BaseException:
                executor.shutdown(cancel_futures=True)
                raise

    if failures:
        logger.warning("%s of %s bootstrap refits failed and were skipped",
                       failures, n_boot)
    if not boot_stats:
        raise utils.StatTestError("No bootstrap refit succeeded")
    return float(np.count_nonzero(np.array(boot_stats) >= stat)) / \
        len(boot_stats)


def ad_test(data: Sequence[float], model: models.UnitModel,
            method: AdMethod = AdMethod.BOOTSTRAP, n_boot: int = 1000,
            seed: int = 0, workers: int = 1) -> tuple[float, float]:
    """Get the AD statistic and p-value of data against a fitted model."""
    stat = ad_statistic(data, model)
    n = np.asarray(data).size
    if method == AdMethod.ASYMPTOTIC:
        return stat, ad_asymptotic_pvalue(stat, n)
    return stat, ad_bootstrap_pvalue(stat, model, n, n_boot, seed, workers)


def goodness_of_fit(data: Sequence[float], fit: FitReport,
                    method: AdMethod = AdMethod.BOOTSTRAP, n_boot: int = 1000,
                    seed: int = 0, workers: int = 1) -> GofReport:
    """Get AD and KS results of a fit on its data."""
    model = fit.model()
    ad_stat, ad_pvalue = ad_test(data, model, method, n_boot, seed, workers)
    ks_stat, ks_pvalue = ks_test(data, model)
    return GofReport(ad_stat=ad_stat, ad_pvalue=ad_pvalue, ks_stat=ks_stat,
                     ks_pvalue=ks_pvalue, ad_method=method)


def runs_distribution(n1: int, n2: int) -> dict[int, float]:
    """Get the exact null distribution of the number of runs."""
    total = math.comb(n1 + n2, n1)
    dist = {}
    for runs in range(2, n1 + n2 + 1):
        k = runs // 2
        if runs % 2 == 0:
            ways = 2 * math.comb(n1 - 1, k - 1) * math.comb(n2 - 1, k - 1)
        else:
            ways = (math.comb(n1 - 1, k - 1) * math.comb(n2 - 1, k)
                    + math.comb(n1 - 1, k) * math.comb(n2 - 1, k - 1))
        if ways:
            dist[runs] = ways / total
    return dist


def runs_test(data: Sequence[float],
              method: RunsMethod = RunsMethod.NORMAL) -> RunsTestReport:
    """Test a series for randomness with the runs about its median.

    Values equal to the median are dropped. The normal method uses no
    continuity correction, auto uses the exact law up to 30 values.
    method defaults to normal, which gives p = 0.3581 on the bundled Phase I
    sample; pass RunsMethod.AUTO for the exact law on small samples.
    """
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size < 2:
        raise utils.StatTestError("Runs test needs at least two values")
    median = float(np.median(arr))
    kept = arr[arr != median]
    above = kept > median
    n1 = int(np.count_nonzero(above))
    n2 = int(kept.size - n1)
    if kept.size < 2 or n1 == 0 or n2 == 0:
        raise utils.StatTestError(
            "Runs test needs values on both sides of the median")

    runs = 1 + int(np.count_nonzero(above[1:] != above[:-1]))
    n = n1 + n2
    if method == RunsMethod.AUTO:
        method = RunsMethod.EXACT if n <= 30 else RunsMethod.NORMAL

    if method == RunsMethod.EXACT:
        dist = runs_distribution(n1, n2)
        lower = sum(p for r, p in dist.items() if r <= runs)
        upper = sum(p for r, p in dist.items() if r >= runs)
        pvalue = min(1.0, 2.0 * min(lower, upper))
    else:
        mean = 2.0 * n1 * n2 / n + 1.0
        variance = (2.0 * n1 * n2 * (2.0 * n1 * n2 - n)
                    / (n * n * (n - 1.0)))
        if variance <= 0.0:
            raise utils.StatTestError(
                f"Too few values ({n}) for the normal approximation")
        z = (runs - mean) / math.sqrt(variance)
        pvalue = float(2.0 * stats.norm.sf(abs(z)))

    return RunsTestReport(n_runs_observed=runs, n_above=n1, n_below=n2,
                          pvalue=pvalue, method=method)
