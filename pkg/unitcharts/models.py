#!/usr/bin/env python3

"""Unit interval probability models, in mean-centric parametrizations.

All three families are indexed by their mean mu and one dispersion
parameter:

- Beta(mu, phi): shapes alpha = mu * phi, beta = (1 - mu) * phi.
- Simplex(mu, sigma): density driven by the deviance
  d(x; mu) = (x - mu)^2 / (x (1 - x) mu^2 (1 - mu)^2).
- Unit Gamma(mu, tau): theta = mu^(1/tau) / (1 - mu^(1/tau)), so that
  -ln X follows a Gamma(tau, rate theta) law.

For maximum-likelihood fitting, parameters are mapped to the real plane
with logit(mu) and log(dispersion), see to_unconstrained().
"""

import abc
import dataclasses
import enum
import functools
import logging
import math
import threading
from typing import Any, ClassVar, Optional, Sequence, Union

import numpy as np

from . import numerics
from . import utils

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# Returned by log_likelihood() on invalid parameters.
LOGLIK_SENTINEL = -1e300

_EPS = np.finfo(float).eps
_CDF_TOL = numerics.Tolerance(abs=1e-14, rel=1e-13, max_iter=2000)


class Family(enum.StrEnum):
    """A unit interval distribution family."""

    BETA = 'beta'
    SIMPLEX = 'simplex'
    UNITGAMMA = 'unitgamma'

    @property
    def display_name(self) -> str:
        """Get the family display name."""
        return {Family.BETA: "Beta",
                Family.SIMPLEX: "Simplex",
                Family.UNITGAMMA: "Unit Gamma"}[self]

    @property
    def dispersion_name(self) -> str:
        """Get the name of the family dispersion parameter."""
        return {Family.BETA: "phi",
                Family.SIMPLEX: "sigma",
                Family.UNITGAMMA: "tau"}[self]

    @property
    def order(self) -> int:
        """Get the family rank used to break ties."""
        return list(Family).index(self)

    def model(self, mu: float, dispersion: float) -> 'UnitModel':
        """Create a model of this family."""
        cls = {Family.BETA: BetaModel,
               Family.SIMPLEX: SimplexModel,
               Family.UNITGAMMA: UnitGammaModel}[self]
        return cls(mu, dispersion)


@dataclasses.dataclass(frozen=True)
class MomentReport:
    """Shape summary of a model."""

    mean: float
    variance: float
    std_dev: float
    cv: float
    skewness: float
    ex_kurtosis_plus3: float

    def as_dict(self) -> dict[str, float]:
        """Export data as a dictionary."""
        return dataclasses.asdict(self)


def _check_open(x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise utils.DomainError(
            "Density is only defined on the open interval (0, 1)")
    return arr


def _check_closed(x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise utils.DomainError(
            "Distribution function is only defined on [0, 1]")
    return arr


def _check_prob(p: float):
    if not 0.0 < p < 1.0:
        raise utils.DomainError(f"Probability must lie in (0, 1), got {p}")


def _clamp(x: np.ndarray) -> np.ndarray:
    return np.clip(x, _EPS, 1.0 - _EPS)


def _shape(arr: np.ndarray, values: np.ndarray) -> Union[float, np.ndarray]:
    if arr.ndim == 0:
        return float(values)
    return values


class UnitModel(abc.ABC):
    """A distribution on the open unit interval with mean mu."""

    family: ClassVar[Family]
    mu: float

    @property
    @abc.abstractmethod
    def dispersion(self) -> float:
        """Get the dispersion parameter value."""

    @property
    def params(self) -> tuple[float, float]:
        """Get (mu, dispersion)."""
        return (self.mu, self.dispersion)

    def _check_mu(self):
        if not (0.0 < self.mu < 1.0 and math.isfinite(self.mu)):
            raise utils.DomainError(f"mu must lie in (0, 1), got {self.mu}")
        if not (self.dispersion > 0 and math.isfinite(self.dispersion)):
            raise utils.DomainError(
                f"{self.family.dispersion_name} must be positive, got "
                f"{self.dispersion}")

    def with_mean(self, mu: float) -> 'UnitModel':
        """Get the same family and dispersion with another mean."""
        return self.family.model(mu, self.dispersion)

    @abc.abstractmethod
    def logpdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """Get the log density, without domain checks."""

    def pdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """Get the density at points of (0, 1)."""
        arr = _check_open(x)
        return _shape(arr, np.exp(self.logpdf(arr)))

    @abc.abstractmethod
    def _cdf_scalar(self, x: float) -> float:
        pass

    def cdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """Get the distribution function at points of [0, 1]."""
        arr = _check_closed(x)
        values = np.array([0.0 if v == 0.0 else 1.0 if v == 1.0
                           else self._cdf_scalar(float(v))
                           for v in arr.ravel()]).reshape(arr.shape)
        return _shape(arr, values)

    @abc.abstractmethod
    def quantile(self, p: float) -> float:
        """Get the quantile of order p."""

    def mean(self) -> float:
        """Get the expected value."""
        return self.mu

    @abc.abstractmethod
    def variance(self) -> float:
        """Get the variance."""

    def std_dev(self) -> float:
        """Get the standard deviation."""
        return math.sqrt(self.variance())

    @abc.abstractmethod
    def _skew_kurt(self) -> tuple[float, float]:
        pass

    def moment_report(self) -> MomentReport:
        """Get mean, spread and shape coefficients."""
        variance = self.variance()
        std_dev = math.sqrt(variance)
        skewness, kurtosis = self._skew_kurt()
        return MomentReport(mean=self.mu, variance=variance, std_dev=std_dev,
                            cv=std_dev / self.mu, skewness=skewness,
                            ex_kurtosis_plus3=kurtosis)

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> Union[float, np.ndarray]:
        """Draw from the model using an exclusively owned generator."""

    def describe(self) -> dict[str, Any]:
        """Export parameters as a dictionary."""
        return {'family': str(self.family), 'mu': self.mu,
                self.family.dispersion_name: self.dispersion}

    def __str__(self):
        return f"{self.family.display_name}(mu={self.mu:g}, " \
               f"{self.family.dispersion_name}={self.dispersion:g})"


@dataclasses.dataclass(frozen=True)
class BetaModel(UnitModel):
    """Beta distribution with mean mu and precision phi."""

    family: ClassVar[Family] = Family.BETA
    mu: float
    phi: float

    def __post_init__(self):
        self._check_mu()

    @property
    def dispersion(self) -> float:
        return self.phi

    @property
    def alpha(self) -> float:
        """Get the first shape parameter."""
        return self.mu * self.phi

    @property
    def beta(self) -> float:
        """Get the second shape parameter."""
        return (1.0 - self.mu) * self.phi

    def logpdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return ((self.alpha - 1.0) * np.log(x)
                + (self.beta - 1.0) * np.log1p(-x)
                - numerics.log_beta(self.alpha, self.beta))

    def _cdf_scalar(self, x: float) -> float:
        return numerics.reg_inc_beta(x, self.alpha, self.beta)

    def quantile(self, p: float) -> float:
        _check_prob(p)
        return numerics.inv_reg_inc_beta(p, self.alpha, self.beta)

    def variance(self) -> float:
        return self.mu * (1.0 - self.mu) / (self.phi + 1.0)

    def _skew_kurt(self) -> tuple[float, float]:
        a, b = self.alpha, self.beta
        s = a + b
        skewness = 2.0 * (b - a) * math.sqrt(s + 1.0) / ((s + 2.0)
                                                          * math.sqrt(a * b))
        excess = (6.0 * ((a - b) ** 2 * (s + 1.0) - a * b * (s + 2.0))
                  / (a * b * (s + 2.0) * (s + 3.0)))
        return skewness, excess + 3.0

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> Union[float, np.ndarray]:
        g1 = rng.standard_gamma(self.alpha, size)
        g2 = rng.standard_gamma(self.beta, size)
        draws = _clamp(np.asarray(g1 / (g1 + g2)))
        return float(draws) if size is None else draws


def _simplex_logdens_logit(t: np.ndarray, mu: float, sigma: float
                           ) -> np.ndarray:
    # Log density of logit(X) for X ~ Simplex(mu, sigma), stable for |t|
    # far beyond the range where expit(t) rounds to 0 or 1.
    logx = -np.logaddexp(0.0, -t)
    log1mx = -np.logaddexp(0.0, t)
    x = np.exp(logx)
    xq = np.exp(logx + log1mx)
    dev = (x - mu) ** 2 / (xq * (mu * (1.0 - mu)) ** 2)
    return (-0.5 * math.log(2.0 * math.pi * sigma ** 2)
            - 0.5 * (logx + log1mx) - dev / (2.0 * sigma ** 2))


class SimplexTable:
    """Cumulative mass of a Simplex model on a logit-spaced knot grid.

    Knots span the region where the logit-scale density stays within e^-75
    of its value at the mean. Panel masses come from 16-point Gauss-Legendre
    rules, and inversion refines the interpolated guess with Newton steps.
    """

    KNOTS = 2048
    LOG_DROP = 75.0
    NEWTON_STEPS = 3

    _GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

    def __init__(self, mu: float, sigma: float):
        self.mu = mu
        self.sigma = sigma

        tmu = math.log(mu / (1.0 - mu))
        ref = float(self._logdens(np.array(tmu)))
        lo = self._find_edge(tmu, ref, -1.0)
        hi = self._find_edge(tmu, ref, 1.0)
        self.knots = np.linspace(lo, hi, self.KNOTS + 1)
        masses = self._panel_mass(self.knots[:-1], self.knots[1:])
        cum = np.concatenate([[0.0], np.cumsum(masses)])
        self.total = float(cum[-1])
        self.cum = cum / self.total
        logger.debug("Built Simplex table for mu=%s sigma=%s on logit "
                     "[%.3f, %.3f], mass %.15f", mu, sigma, lo, hi,
                     self.total)

    def _logdens(self, t: np.ndarray) -> np.ndarray:
        return _simplex_logdens_logit(t, self.mu, self.sigma)

    def _find_edge(self, start: float, ref: float, direction: float
                   ) -> float:
        def excess(t):
            return float(self._logdens(np.array(t))) - (ref - self.LOG_DROP)

        inner = start
        for _ in range(200):
            outer = inner + direction
            if excess(outer) < 0:
                lo, hi = sorted((inner, outer))
                return numerics.find_root(excess, numerics.Bracket(lo, hi))
            inner = outer
        return inner

    def _panel_mass(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        half = 0.5 * (hi - lo)[:, None]
        nodes = 0.5 * (hi + lo)[:, None] + half * self._GL_NODES
        return (half * np.exp(self._logdens(nodes))) @ self._GL_WEIGHTS

    def bracket(self, p: float) -> tuple[float, float]:
        """Get knots (in x scale) surrounding the quantile of order p."""
        k = int(np.searchsorted(self.cum, p, side='right')) - 1
        lo = self.knots[max(k - 1, 0)]
        hi = self.knots[min(k + 2, self.KNOTS)]
        return (float(_expit(lo)), float(_expit(hi)))

    def invert(self, u: np.ndarray) -> np.ndarray:
        """Map uniform variates to Simplex variates."""
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(self.cum, u, side='right') - 1,
                    0, self.KNOTS - 1)
        tlo = self.knots[k]
        thi = self.knots[k + 1]
        clo = self.cum[k]
        width = self.cum[k + 1] - clo
        frac = np.where(width > 0, (u - clo) / np.where(width > 0, width, 1),
                        0.5)
        t = tlo + np.clip(frac, 0.0, 1.0) * (thi - tlo)
        for _ in range(self.NEWTON_STEPS):
            partial = self._panel_mass(tlo, t) / self.total
            dens = np.exp(self._logdens(t)) / self.total
            step = np.where(dens > 0, (clo + partial - u)
                            / np.where(dens > 0, dens, 1.0), 0.0)
            t = np.clip(t - step, tlo, thi)
        return _clamp(_expit(t))


def _expit(t: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -t))


_table_lock = threading.Lock()


@functools.lru_cache(maxsize=64)
def _cached_simplex_table(mu: float, sigma: float) -> SimplexTable:
    return SimplexTable(mu, sigma)


def simplex_table(mu: float, sigma: float) -> SimplexTable:
    """Get the shared quantile table of a Simplex model."""
    with _table_lock:
        return _cached_simplex_table(mu, sigma)


@dataclasses.dataclass(frozen=True)
class SimplexModel(UnitModel):
    """Simplex distribution with mean mu and dispersion sigma."""

    family: ClassVar[Family] = Family.SIMPLEX
    mu: float
    sigma: float

    def __post_init__(self):
        self._check_mu()

    @property
    def dispersion(self) -> float:
        return self.sigma

    def deviance(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """Get the unit deviance d(x; mu)."""
        x = np.asarray(x, dtype=float)
        mu = self.mu
        return (x - mu) ** 2 / (x * (1.0 - x) * mu ** 2 * (1.0 - mu) ** 2)

    def logpdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return (-0.5 * math.log(2.0 * math.pi * self.sigma ** 2)
                - 1.5 * (np.log(x) + np.log1p(-x))
                - self.deviance(x) / (2.0 * self.sigma ** 2))

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def _breakpoints(self) -> list[float]:
        sd = self.std_dev()
        return [self.mu + k * sd for k in (-4.0, -1.0, 0.0, 1.0, 4.0)]

    def _integrate(self, integrand, lo: float, hi: float) -> float:
        return numerics.quad(integrand, lo, hi, _CDF_TOL,
                             points=self._breakpoints())

    def _cdf_scalar(self, x: float) -> float:
        # Integrate over the shorter tail for accuracy.
        if x <= self.mu:
            return self._integrate(self._density, 0.0, x)
        return 1.0 - self._integrate(self._density, x, 1.0)

    @property
    def table(self) -> SimplexTable:
        """Get the shared quantile table of this model."""
        return simplex_table(self.mu, self.sigma)

    def quantile(self, p: float) -> float:
        _check_prob(p)
        lo, hi = self.table.bracket(p)
        flo = self._cdf_scalar(lo) - p if lo > 0 else -p
        if flo > 0:
            lo = 0.0
        fhi = self._cdf_scalar(hi) - p if hi < 1 else 1.0 - p
        if fhi < 0:
            hi = 1.0

        def target(x):
            if x <= 0.0:
                return -p
            if x >= 1.0:
                return 1.0 - p
            return self._cdf_scalar(x) - p

        return numerics.find_root(target, numerics.Bracket(lo, hi),
                                  numerics.Tolerance(abs=1e-13, rel=1e-13,
                                                     max_iter=200))

    def variance(self) -> float:
        # mu (1 - mu) - e^c Gamma(1/2, c) / sqrt(2 sigma^2),
        # c = 1 / (2 sigma^2 mu^2 (1 - mu)^2).
        mu, s2 = self.mu, self.sigma ** 2
        c = 1.0 / (2.0 * s2 * mu ** 2 * (1.0 - mu) ** 2)
        return (mu * (1.0 - mu)
                - numerics.scaled_upper_gamma(0.5, c) / math.sqrt(2.0 * s2))

    def central_moment(self, k: int) -> float:
        """Get E[(X - mu)^k] by quadrature."""
        mu = self.mu
        return self._integrate(lambda x: (x - mu) ** k * self._density(x),
                               0.0, 1.0)

    def _skew_kurt(self) -> tuple[float, float]:
        sd = self.std_dev()
        return (self.central_moment(3) / sd ** 3,
                self.central_moment(4) / sd ** 4)

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> Union[float, np.ndarray]:
        u = rng.random(size)
        draws = self.table.invert(np.atleast_1d(u))
        return float(draws[0]) if size is None else draws


@dataclasses.dataclass(frozen=True)
class UnitGammaModel(UnitModel):
    """Unit Gamma distribution with mean mu and shape tau."""

    family: ClassVar[Family] = Family.UNITGAMMA
    mu: float
    tau: float

    def __post_init__(self):
        self._check_mu()

    @property
    def dispersion(self) -> float:
        return self.tau

    @property
    def theta(self) -> float:
        """Get the rate of -ln X."""
        lroot = math.log(self.mu) / self.tau
        return math.exp(lroot) / -math.expm1(lroot)

    def logpdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        theta, tau = self.theta, self.tau
        return (tau * math.log(theta) - math.lgamma(tau)
                + (theta - 1.0) * np.log(x) + (tau - 1.0) * np.log(-np.log(x)))

    def _cdf_scalar(self, x: float) -> float:
        return numerics.reg_upper_gamma(self.tau, -self.theta * math.log(x))

    def quantile(self, p: float) -> float:
        _check_prob(p)
        y = numerics.inv_reg_upper_gamma(p, self.tau)
        return math.exp(-y / self.theta)

    def raw_moment(self, k: int) -> float:
        """Get E[X^k] = (theta / (theta + k))^tau."""
        return math.exp(-self.tau * math.log1p(k / self.theta))

    def variance(self) -> float:
        mu, tau = self.mu, self.tau
        root = math.exp(math.log(mu) / tau)
        return mu * (math.exp(-tau * math.log(2.0 - root)) - mu)

    def _skew_kurt(self) -> tuple[float, float]:
        m1, m2, m3, m4 = (self.raw_moment(k) for k in range(1, 5))
        var = m2 - m1 ** 2
        c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3
        c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 ** 2 * m2 - 3.0 * m1 ** 4
        return c3 / var ** 1.5, c4 / var ** 2

    def sample(self, rng: np.random.Generator,
               size: Optional[int] = None) -> Union[float, np.ndarray]:
        gamma = rng.standard_gamma(self.tau, size)
        draws = _clamp(np.exp(-np.asarray(gamma) / self.theta))
        return float(draws) if size is None else draws


def check_data(data: ArrayLike) -> np.ndarray:
    """Check observations lie strictly inside (0, 1)."""
    arr = np.asarray(data, dtype=float).ravel()
    bad = np.flatnonzero(~((arr > 0.0) & (arr < 1.0)))
    if bad.size:
        index = int(bad[0])
        raise utils.DataError(
            f"Observation {index + 1} ({arr[index]}) is outside the open "
            f"interval (0, 1)", index)
    return arr


def _log_likelihood(family: Family, params: Sequence[float],
                    data: np.ndarray) -> float:
    mu, dispersion = params
    if not (0.0 < mu < 1.0 and dispersion > 0 and math.isfinite(dispersion)):
        return LOGLIK_SENTINEL
    try:
        model = family.model(mu, dispersion)
        with np.errstate(all='ignore'):
            value = float(np.sum(model.logpdf(data)))
    except (utils.DomainError, OverflowError, ValueError):
        return LOGLIK_SENTINEL
    if not math.isfinite(value):
        return LOGLIK_SENTINEL
    return value


def log_likelihood(family: Family, params: Sequence[float],
                   data: ArrayLike) -> float:
    """Get the log-likelihood of (mu, dispersion) on data.

    Invalid parameters give LOGLIK_SENTINEL, so that an optimizer probing
    outside the parameter space can recover.
    """
    return _log_likelihood(family, params, check_data(data))


def to_unconstrained(params: Sequence[float]) -> np.ndarray:
    """Map (mu, dispersion) to (logit mu, log dispersion)."""
    mu, dispersion = params
    return np.array([math.log(mu / (1.0 - mu)), math.log(dispersion)])


def from_unconstrained(eta: Sequence[float]) -> tuple[float, float]:
    """Map (logit mu, log dispersion) back to (mu, dispersion).

    A log dispersion beyond the float range maps to an infinite dispersion.
    """
    logit_mu, log_disp = eta
    try:
        dispersion = math.exp(log_disp)
    except OverflowError:
        dispersion = math.inf
    return (float(_expit(np.array(logit_mu))), dispersion)


def start_values(family: Family, data: ArrayLike) -> tuple[float, float]:
    """Get moment-based starting values for a fit."""
    arr = check_data(data)
    mu = float(np.mean(arr))
    if family == Family.BETA:
        var = float(np.var(arr, ddof=1)) if arr.size > 1 else 0.0
        phi = mu * (1.0 - mu) / var - 1.0 if var > 0 else 100.0
        return (mu, max(phi, 1.0))
    if family == Family.SIMPLEX:
        model = SimplexModel(mu, 1.0)
        return (mu, max(math.sqrt(float(np.mean(model.deviance(arr)))),
                        1e-3))
    logs = -np.log(arr)
    var = float(np.var(logs, ddof=1)) if arr.size > 1 else 0.0
    tau = float(np.mean(logs)) ** 2 / var if var > 0 else 100.0
    return (mu, max(tau, 1e-2))
