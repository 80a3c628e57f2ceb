#!/usr/bin/env python3

"""Reference study design and regeneration of its result tables.

Every case pairs three models with mean 0.2 and close dispersion: Beta
precision phi, Simplex dispersion sigma and Unit Gamma shape tau.
"""

import dataclasses
import logging
from typing import Any, Optional, Sequence

import click

from . import charts
from . import inference
from . import models
from . import simulation
from . import utils

logger = logging.getLogger(__name__)

Family = models.Family

MU0 = 0.2
ALPHA = 0.0027
LAMBDAS = (0.05, 0.10, 0.20)
SHIFT_MEANS = (0.12, 0.14, 0.16, 0.18, 0.20, 0.22, 0.24, 0.26, 0.28)

CASES: dict[int, dict[Family, float]] = {
    1: {Family.BETA: 290.0, Family.SIMPLEX: 0.37, Family.UNITGAMMA: 155.0},
    2: {Family.BETA: 148.0, Family.SIMPLEX: 0.50, Family.UNITGAMMA: 96.0},
    3: {Family.BETA: 80.0, Family.SIMPLEX: 0.71, Family.UNITGAMMA: 51.0},
    4: {Family.BETA: 31.0, Family.SIMPLEX: 1.20, Family.UNITGAMMA: 20.0},
}

# Previously calibrated L per (family, case), for lambda 0.05, 0.10, 0.20.
PUBLISHED_L: dict[tuple[Family, int], tuple[float, float, float]] = {
    (Family.BETA, 1): (2.481, 2.701, 2.861),
    (Family.BETA, 2): (2.485, 2.693, 2.864),
    (Family.BETA, 3): (2.487, 2.701, 2.869),
    (Family.BETA, 4): (2.483, 2.702, 2.884),
    (Family.SIMPLEX, 1): (2.491, 2.700, 2.866),
    (Family.SIMPLEX, 2): (2.491, 2.705, 2.874),
    (Family.SIMPLEX, 3): (2.489, 2.703, 2.882),
    (Family.SIMPLEX, 4): (2.528, 2.752, 2.977),
    (Family.UNITGAMMA, 1): (2.492, 2.703, 2.864),
    (Family.UNITGAMMA, 2): (2.497, 2.701, 2.872),
    (Family.UNITGAMMA, 3): (2.491, 2.697, 2.875),
    (Family.UNITGAMMA, 4): (2.487, 2.704, 2.899),
}

FAMILY_TABLES = {'4': Family.BETA, '5': Family.SIMPLEX,
                 '6': Family.UNITGAMMA}
ROBUSTNESS_TABLES = {
    str(7 + 3 * f + i): (family, lam)
    for f, family in enumerate(Family)
    for i, lam in enumerate(LAMBDAS)
}
TABLE_IDS = ('3', *FAMILY_TABLES, *ROBUSTNESS_TABLES, 'A1', '16')


@dataclasses.dataclass
class Table:
    """A regenerated result table."""

    table_id: str
    title: str
    headers: list[str]
    rows: list[list[Any]]

    def as_dict(self) -> dict[str, Any]:
        """Export data as a dictionary."""
        return {'table': self.table_id, 'title': self.title,
                'rows': [dict(zip(self.headers, row)) for row in self.rows]}


def case_model(family: Family, case: int) -> models.UnitModel:
    """Get the model of a family in a case."""
    try:
        return family.model(MU0, CASES[case][family])
    except KeyError as err:
        raise utils.DomainError(f"Unknown case {case}") from err


def case_models(case: int) -> list[models.UnitModel]:
    """Get the three models of a case, in family order."""
    return [case_model(family, case) for family in Family]


def shift_profile() -> simulation.ShiftProfile:
    """Get the reference profile of OOC means."""
    return simulation.ShiftProfile.from_means(MU0, SHIFT_MEANS)


def published_l(family: Family, case: int, lam: float) -> float:
    """Get the previously calibrated L of a design."""
    try:
        return PUBLISHED_L[(family, case)][LAMBDAS.index(lam)]
    except (KeyError, ValueError) as err:
        raise utils.DomainError(f"No published L for {family.display_name}, "
                                f"case {case}, lambda {lam}") from err


def design_l(family: Family, case: int, lam: float,
             config: simulation.DesignConfig, published: bool) -> float:
    """Get L of a design, calibrated unless published values are used."""
    if published:
        return published_l(family, case, lam)
    limit, _ = simulation.calibrate_l(case_model(family, case), lam, config)
    return limit


def _check_cases(cases: Optional[Sequence[int]]) -> list[int]:
    cases = sorted(cases) if cases else sorted(CASES)
    unknown = [case for case in cases if case not in CASES]
    if unknown:
        raise utils.DomainError(f"Unknown cases {unknown}")
    return cases


def table_moments(cases: Optional[Sequence[int]] = None) -> Table:
    """Get the moments of every case model."""
    rows = []
    for family in Family:
        for case in _check_cases(cases):
            model = case_model(family, case)
            report = model.moment_report()
            rows.append([family.display_name, case, model.dispersion,
                         report.std_dev, report.cv, report.skewness,
                         report.ex_kurtosis_plus3])
    return Table('3', f"Properties of the models with mu0 = {MU0}",
                 ["family", "case", "dispersion", "sigma0x", "cv",
                  "skewness", "kurtosis"], rows)


def table_family(table_id: str, config: simulation.DesignConfig,
                 published: bool = False,
                 cases: Optional[Sequence[int]] = None) -> Table:
    """Get Shewhart and EWMA ARLs of one family across shifts."""
    # pylint: disable=too-many-locals
    family = FAMILY_TABLES[table_id]
    profile = shift_profile()
    headers = ["case", family.dispersion_name, "mu1", "SH"]
    headers += [f"lambda={lam:.2f}" for lam in LAMBDAS]
    headers += [f"se {lam:.2f}" for lam in LAMBDAS]
    rows = []

    with click.progressbar(_check_cases(cases), label=f"Table {table_id}",
                           file=click.get_text_stream('stderr')) as progress:
        for case in progress:
            model = case_model(family, case)
            shewhart = charts.shewhart_limits(model, ALPHA)
            ewmas = [charts.ewma_limits(model, lam,
                                        design_l(family, case, lam, config,
                                                 published))
                     for lam in LAMBDAS]
            profiles = [simulation.ooc_profile(chart, model, profile, config)
                        for chart in ewmas]

            for i, mu1 in enumerate(profile.mu1_values):
                p = simulation.p_out(model.with_mean(mu1), shewhart.lcl,
                                     shewhart.ucl)
                exact = simulation.shewhart_rl_exact(p)
                rows.append([case, model.dispersion, mu1, exact.arl]
                            + [prof[i][1].arl for prof in profiles]
                            + [prof[i][1].se_arl for prof in profiles])
            rows.append([case, model.dispersion, "UCL", shewhart.ucl]
                        + [chart.ucl for chart in ewmas] + [None] * 3)
            rows.append([case, model.dispersion, "LCL", shewhart.lcl]
                        + [chart.lcl for chart in ewmas] + [None] * 3)

    return Table(table_id, f"ARL of Shewhart and EWMA charts, "
                 f"{family.display_name} model", headers, rows)


def table_robustness(table_id: str, config: simulation.DesignConfig,
                     published: bool = False,
                     cases: Optional[Sequence[int]] = None) -> Table:
    """Get run lengths of EWMA charts built on every family's limits."""
    # pylint: disable=too-many-locals
    true_family, lam = ROBUSTNESS_TABLES[table_id]
    profile = shift_profile()
    headers = ["case", "mu1"]
    for family in Family:
        headers += [f"{family} ARL", f"{family} SDRL", f"{family} MRL"]
    rows = []

    with click.progressbar(_check_cases(cases), label=f"Table {table_id}",
                           file=click.get_text_stream('stderr')) as progress:
        for case in progress:
            true_model = case_model(true_family, case)
            limit_charts = [
                charts.ewma_limits(case_model(family, case), lam,
                                   design_l(family, case, lam, config,
                                            published))
                for family in Family]
            profiles = [simulation.ooc_profile(chart, true_model, profile,
                                               config)
                        for chart in limit_charts]

            for i, mu1 in enumerate(profile.mu1_values):
                row = [case, mu1]
                for prof in profiles:
                    summary = prof[i][1]
                    row += [summary.arl, summary.sdrl, summary.mrl]
                rows.append(row)
            for name in ("LCL", "UCL"):
                row = [case, name]
                for chart in limit_charts:
                    row += [getattr(chart, name.lower()), None, None]
                rows.append(row)

    return Table(table_id, f"EWMA charts with lambda = {lam:.2f}, true model "
                 f"{true_family.display_name}", headers, rows)


def table_l_values(config: simulation.DesignConfig,
                   cases: Optional[Sequence[int]] = None) -> Table:
    """Get calibrated L of every design next to the published values."""
    designs = [(case, family, lam) for case in _check_cases(cases)
               for family in Family for lam in LAMBDAS]
    rows = []
    with click.progressbar(designs, label="Table A1",
                           file=click.get_text_stream('stderr')) as progress:
        for case, family, lam in progress:
            limit, achieved = simulation.calibrate_l(
                case_model(family, case), lam, config)
            rows.append([case, str(family), lam, limit,
                         published_l(family, case, lam), achieved.arl,
                         achieved.se_arl])
    return Table('A1', f"L values for ARL0 = {config.arl0}",
                 ["case", "family", "lambda", "L", "published L", "ARL0",
                  "se"], rows)


def table_fits(data: Sequence[float],
               ad_method: inference.AdMethod = inference.AdMethod.BOOTSTRAP,
               n_boot: int = 1000, seed: int = 0, workers: int = 1) -> Table:
    """Get the fits, selection criteria and tests of a Phase I sample."""
    rows = []
    for family in Family:
        fit = inference.fit_mle(family, data)
        gof = inference.goodness_of_fit(data, fit, ad_method, n_boot, seed,
                                        workers)
        rows.append([family.display_name, fit.estimates[0], fit.std_errors[0],
                     fit.estimates[1], fit.std_errors[1], fit.aic, fit.bic,
                     gof.ad_stat, gof.ad_pvalue, gof.ks_stat, gof.ks_pvalue])
    return Table('16', "Estimates and model selection criteria",
                 ["family", "mu", "se mu", "dispersion", "se dispersion",
                  "AIC", "BIC", "AD", "AD p", "KS", "KS p"], rows)
