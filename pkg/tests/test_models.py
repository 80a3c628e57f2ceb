#!/usr/bin/env python3

"""Tests of the unit interval distribution families."""

import math

import numpy as np
import pytest

from unitcharts import inference
from unitcharts import models
from unitcharts import numerics
from unitcharts import tables
from unitcharts import utils

Family = models.Family

# In-control standard deviations of the reference cases, by family.
SIGMA0X = {
    Family.BETA: (0.02344842, 0.03276928, 0.04444444, 0.07071068),
    Family.SIMPLEX: (0.02355733, 0.03170082, 0.04460488, 0.07309293),
    Family.UNITGAMMA: (0.02582828, 0.03279827, 0.04493217, 0.07138937),
}

ALL_CASE_MODELS = [tables.case_model(family, case)
                   for family in Family for case in tables.CASES]


def _integral(model, func):
    sd = model.std_dev()
    points = [model.mu + k * sd for k in (-4.0, -1.0, 0.0, 1.0, 4.0)]

    def integrand(x):
        with np.errstate(all='ignore'):
            return func(x) * np.exp(model.logpdf(x))

    return numerics.quad(integrand, 0.0, 1.0, points=points)


@pytest.mark.parametrize("model", ALL_CASE_MODELS, ids=str)
def test_density_moments(model):
    assert _integral(model, np.ones_like) == pytest.approx(1.0, abs=1e-8)
    assert _integral(model, lambda x: x) == pytest.approx(model.mu,
                                                          abs=1e-8)
    assert _integral(model, lambda x: (x - model.mu) ** 2) == \
        pytest.approx(model.variance(), abs=1e-9)


@pytest.mark.parametrize("family", list(Family))
@pytest.mark.parametrize("case", [1, 2, 3, 4])
def test_case_std_dev(family, case):
    model = tables.case_model(family, case)
    expected = SIGMA0X[family][case - 1]
    report = model.moment_report()
    assert report.std_dev == pytest.approx(expected, abs=1e-6)
    assert report.cv == pytest.approx(expected / 0.2, abs=5e-6)
    assert report.mean == 0.2


def test_beta_shape_coefficients():
    report = models.BetaModel(0.2, 290.0).moment_report()
    assert report.skewness == pytest.approx(0.17526, abs=1e-4)
    assert report.ex_kurtosis_plus3 == pytest.approx(3.0254, abs=1e-3)


def test_shape_coefficients_by_quadrature():
    for model in (models.SimplexModel(0.2, 0.71),
                  models.UnitGammaModel(0.2, 51.0)):
        report = model.moment_report()
        sd = report.std_dev
        skew = _integral(model, lambda x: (x - 0.2) ** 3) / sd ** 3
        kurt = _integral(model, lambda x: (x - 0.2) ** 4) / sd ** 4
        assert report.skewness == pytest.approx(skew, abs=1e-6)
        assert report.ex_kurtosis_plus3 == pytest.approx(kurt, abs=1e-6)


def test_beta_is_uniform():
    model = models.BetaModel(0.5, 2.0)
    assert model.pdf(0.3) == pytest.approx(1.0, abs=1e-12)
    assert model.cdf(0.3) == pytest.approx(0.3, abs=1e-12)
    assert model.quantile(0.25) == pytest.approx(0.25, abs=1e-12)
    assert model.alpha == 1.0 and model.beta == 1.0


def test_simplex_density_at_mean():
    model = models.SimplexModel(0.2, 0.37)
    assert model.pdf(0.2) == pytest.approx(16.847, abs=1e-3)
    assert model.deviance(0.2) == 0.0


def test_unit_gamma_theta():
    model = models.UnitGammaModel(0.2, 20.0)
    assert model.raw_moment(1) == pytest.approx(0.2, rel=1e-13)
    root = 0.2 ** (1.0 / 20.0)
    assert model.theta == pytest.approx(root / (1.0 - root), rel=1e-12)


@pytest.mark.parametrize("model", ALL_CASE_MODELS, ids=str)
def test_cdf_bounds_and_monotonicity(model):
    assert model.cdf(0.0) == 0.0
    assert model.cdf(1.0) == 1.0
    values = model.cdf(np.linspace(0.0, 1.0, 1001))
    assert np.all(np.diff(values) >= -1e-12)
    assert np.all((values >= 0.0) & (values <= 1.0))


@pytest.mark.parametrize("model", [
    models.BetaModel(0.3, 5.0),
    models.BetaModel(0.2, 290.0),
    models.SimplexModel(0.4, 1.5),
    models.SimplexModel(0.2, 0.37),
    models.UnitGammaModel(0.4, 2.0),
    models.UnitGammaModel(0.2, 155.0),
], ids=str)
def test_quantile_inverts_cdf(model):
    for p in (0.00135, 0.05, 0.5, 0.95, 0.99865):
        x = model.quantile(p)
        assert 0.0 < x < 1.0
        assert model.cdf(x) == pytest.approx(p, abs=1e-9)


@pytest.mark.parametrize("model", [
    models.BetaModel(0.3, 5.0),
    models.SimplexModel(0.4, 1.5),
    models.UnitGammaModel(0.4, 2.0),
], ids=str)
def test_cdf_inverts_quantile(model):
    for x in (0.1, 0.2, 0.4, 0.6, 0.8):
        assert model.quantile(model.cdf(x)) == pytest.approx(x, abs=1e-7)


def test_reference_quantiles(peanut_simplex):
    assert peanut_simplex.quantile(0.00135) == pytest.approx(0.7794,
                                                             abs=5e-4)
    assert peanut_simplex.quantile(0.99865) == pytest.approx(0.9936,
                                                             abs=5e-4)
    assert peanut_simplex.cdf(0.7794) == pytest.approx(0.00135, abs=1e-4)
    beta = models.BetaModel(0.2, 290.0)
    assert beta.quantile(0.00135) == pytest.approx(0.1355, abs=5e-5)
    assert beta.cdf(0.2755) == pytest.approx(0.99865, abs=1e-4)
    unit_gamma = models.UnitGammaModel(0.2, 20.0)
    assert unit_gamma.quantile(0.99865) == pytest.approx(0.46286, abs=1e-4)


def test_domain_errors():
    model = models.BetaModel(0.2, 31.0)
    with pytest.raises(utils.DomainError):
        model.pdf(1.0)
    with pytest.raises(utils.DomainError):
        model.pdf([0.5, 0.0])
    with pytest.raises(utils.DomainError):
        model.cdf(1.2)
    for p in (0.0, 1.0, -0.1):
        with pytest.raises(utils.DomainError):
            model.quantile(p)
    with pytest.raises(utils.DomainError):
        Family.SIMPLEX.model(1.0, 0.5)
    with pytest.raises(utils.DomainError):
        Family.UNITGAMMA.model(0.2, 0.0)
    with pytest.raises(ValueError):
        models.BetaModel(math.nan, 1.0)


def test_vector_and_scalar_evaluation():
    model = models.UnitGammaModel(0.2, 51.0)
    grid = np.array([0.1, 0.2, 0.3])
    assert isinstance(model.pdf(0.2), float)
    assert isinstance(model.cdf(0.2), float)
    assert model.pdf(grid).shape == (3,)
    assert model.cdf(grid)[1] == pytest.approx(model.cdf(0.2))


def test_family_helpers():
    assert [str(f) for f in Family] == ['beta', 'simplex', 'unitgamma']
    assert Family('simplex').display_name == "Simplex"
    assert Family.UNITGAMMA.dispersion_name == 'tau'
    assert [f.order for f in Family] == [0, 1, 2]
    model = Family.BETA.model(0.2, 290.0)
    assert model.with_mean(0.16) == models.BetaModel(0.16, 290.0)
    assert model.describe() == {'family': 'beta', 'mu': 0.2, 'phi': 290.0}
    assert str(model) == "Beta(mu=0.2, phi=290)"


def test_check_data_reports_index():
    with pytest.raises(utils.DataError) as excinfo:
        models.check_data([0.2, 0.5, 1.0, 0.0])
    assert excinfo.value.index == 2
    assert "Observation 3" in str(excinfo.value)
    assert models.check_data([0.5]).shape == (1,)


def test_log_likelihood(phase1):
    assert models.log_likelihood(Family.BETA, (0.9533, 48.9438),
                                 phase1) == pytest.approx(44.7275, abs=0.05)
    assert models.log_likelihood(Family.SIMPLEX, (0.9534, 3.5742),
                                 phase1) == pytest.approx(46.3265, abs=0.05)
    assert models.log_likelihood(Family.BETA, (0.5, 2.0), [0.5]) == \
        pytest.approx(0.0, abs=1e-12)


def test_log_likelihood_invalid():
    assert models.log_likelihood(Family.BETA, (1.2, 5.0), [0.5]) == \
        models.LOGLIK_SENTINEL
    assert models.log_likelihood(Family.SIMPLEX, (0.5, -1.0), [0.5]) == \
        models.LOGLIK_SENTINEL
    with pytest.raises(utils.DataError):
        models.log_likelihood(Family.BETA, (0.5, 2.0), [0.5, 1.0])


def test_unconstrained_mapping():
    eta = models.to_unconstrained((0.2, 290.0))
    assert eta == pytest.approx([math.log(0.25), math.log(290.0)])
    assert models.from_unconstrained(eta) == pytest.approx((0.2, 290.0))

    mu, dispersion = models.from_unconstrained([0.0, 800.0])
    assert (mu, dispersion) == (0.5, math.inf)
    assert models.log_likelihood(Family.BETA, (mu, dispersion), [0.5]) == \
        models.LOGLIK_SENTINEL


def test_start_values(phase1):
    for family in Family:
        mu, dispersion = models.start_values(family, phase1)
        assert mu == pytest.approx(float(np.mean(phase1)))
        assert dispersion > 0


def test_sampling_is_reproducible():
    for model in (models.BetaModel(0.2, 80.0), models.SimplexModel(0.2, 0.71),
                  models.UnitGammaModel(0.2, 51.0)):
        first = model.sample(np.random.default_rng(7), 50)
        second = model.sample(np.random.default_rng(7), 50)
        assert np.array_equal(first, second)
        assert np.all((first > 0.0) & (first < 1.0))
        assert isinstance(model.sample(np.random.default_rng(7)), float)


def test_beta_sampling_moments():
    draws = models.BetaModel(0.5, 2.0).sample(np.random.default_rng(1),
                                              100_000)
    se = math.sqrt(1.0 / 12.0 / draws.size)
    assert abs(draws.mean() - 0.5) < 4.0 * se


def test_unit_gamma_sampling_moments():
    model = models.UnitGammaModel(0.2, 155.0)
    draws = model.sample(np.random.default_rng(2), 100_000)
    assert np.var(draws) == pytest.approx(0.02582828 ** 2, rel=0.02)

    logs = -np.log(draws)
    mean, var = model.tau / model.theta, model.tau / model.theta ** 2
    assert abs(logs.mean() - mean) < 4.0 * math.sqrt(var / logs.size)
    assert np.var(logs) == pytest.approx(var, rel=0.02)


def test_simplex_sampling_matches_cdf():
    model = models.SimplexModel(0.2, 0.71)
    draws = model.sample(np.random.default_rng(3), 1000)
    _, pvalue = inference.ks_test(draws, model)
    assert pvalue > 0.001


def test_simplex_table():
    table = models.simplex_table(0.2, 0.5)
    assert table is models.simplex_table(0.2, 0.5)
    assert table.total == pytest.approx(1.0, abs=1e-9)
    assert table.cum[0] == 0.0 and table.cum[-1] == pytest.approx(1.0)
    lo, hi = table.bracket(0.5)
    median = models.SimplexModel(0.2, 0.5).quantile(0.5)
    assert lo <= median <= hi
    u = np.array([0.001, 0.25, 0.5, 0.75, 0.999])
    x = table.invert(u)
    assert models.SimplexModel(0.2, 0.5).cdf(x) == pytest.approx(u,
                                                                 abs=1e-7)
