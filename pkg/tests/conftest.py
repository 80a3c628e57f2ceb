#!/usr/bin/env python3

"""Shared fixtures."""

import pytest

from unitcharts import models
from unitcharts import reports


@pytest.fixture(scope="session")
def phase1():
    """Peanut contamination Phase I sample."""
    return reports.read_series(reports.bundled_dataset(1))


@pytest.fixture(scope="session")
def phase2():
    """Peanut contamination Phase II series."""
    return reports.read_series(reports.bundled_dataset(2))


@pytest.fixture(scope="session")
def peanut_simplex():
    """Simplex model fitted on the Phase I sample."""
    return models.SimplexModel(0.9534, 3.5742)
