import numpy as np
import pytest

from prognostic_logit import TrialDataset


def random_dataset(rng: np.random.Generator, n: int, beta=(0.3, 0.8, 1.0), score_sd: float = 1.0) -> TrialDataset:
    """Small logistic dataset with both arms and both outcomes present in each arm."""
    while True:
        w = rng.permutation(np.repeat([0, 1], [n // 2, n - n // 2]))
        m = rng.normal(0.0, score_sd, n)
        p = 1.0 / (1.0 + np.exp(-(beta[0] + beta[1] * w + beta[2] * m)))
        y = (rng.random(n) < p).astype(int)
        ok = all(0 < y[w == a].sum() < (w == a).sum() for a in (0, 1))
        if ok:
            return TrialDataset.from_arrays(w, y, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_trial(rng):
    return random_dataset(rng, 120)


# Monte Carlo runs are expensive; each distinct configuration runs once per session.
_RUNS = {}


def scenario_run(name, **overrides):
    from prognostic_logit.simulation import get_scenario, run_scenario
    key = (name, tuple(sorted(overrides.items())))
    if key not in _RUNS:
        _RUNS[key] = run_scenario(get_scenario(name, **overrides), keep_replications=True)
    return _RUNS[key]


@pytest.fixture(scope="session")
def baseline_5000():
    return scenario_run("baseline", replications=5000, bootstrap_replications=0)


# Acceptance lines are collected here and repeated in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
