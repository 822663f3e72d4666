from __future__ import annotations

from datetime import date

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cryptodr.cli import default_config_path
from cryptodr.features import FeatureMatrix
from cryptodr.market_data import OhlcvBar, series_from_bars
from cryptodr.pipeline import ExperimentConfig, run_experiment

from oracles import calendar

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def make_matrix(values, names=None, start=date(2020, 1, 1)) -> FeatureMatrix:
    values = np.asarray(values, dtype=float)
    names = names or [f"c{i}" for i in range(values.shape[1])]
    return FeatureMatrix(tuple(calendar(start, values.shape[0])), tuple(names), values)


def random_walk_series(asset: str, n: int, seed: int, start=date(2020, 1, 1)):
    rng = np.random.default_rng(seed)
    close = 100 * np.exp(np.cumsum(0.02 * rng.standard_normal(n)))
    bars = []
    for d, c in zip(calendar(start, n), close):
        o = c * np.exp(0.005 * rng.standard_normal())
        hi = max(o, c) * (1 + 0.01 * rng.random() + 1e-4)
        lo = min(o, c) * (1 - 0.01 * rng.random() - 1e-4)
        bars.append(OhlcvBar(d, float(o), float(hi), float(lo), float(c), float(1e6 * (1 + rng.random()))))
    return series_from_bars(asset, bars)


@pytest.fixture(scope="session")
def default_config() -> ExperimentConfig:
    return ExperimentConfig.load(default_config_path())


@pytest.fixture(scope="session")
def fixture_report(default_config):
    return run_experiment(default_config)

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
