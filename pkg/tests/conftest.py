import time

import pytest

from cdma_games.equilibrium import GameKind
from cdma_games.model import SystemConfig
from cdma_games.montecarlo import run_experiment

ACCEPTANCE = {}
TRIALS = 2000
BASE_SEED = 0


class Verdicts:
    def record(self, number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        assert ok, f"criterion {number}: {detail}"


@pytest.fixture(scope="session")
def verdicts():
    return Verdicts()


class _Runs:
    """Monte Carlo sweeps shared by several acceptance criteria, run once each."""

    def __init__(self):
        self._cache = {}

    def get(self, K_list, games):
        key = (tuple(K_list), tuple(games))
        if key not in self._cache:
            t0 = time.perf_counter()
            stats = run_experiment(K_list, games, TRIALS, BASE_SEED, SystemConfig())
            self._cache[key] = (stats, time.perf_counter() - t0)
        return self._cache[key]


@pytest.fixture(scope="session")
def runs():
    return _Runs()


@pytest.fixture(scope="session")
def below_capacity(runs):
    """All four games at K = 3, 5, 7 with N = 7."""
    return runs.get((3, 5, 7), tuple(GameKind))


@pytest.fixture(scope="session")
def oversaturated(runs):
    """The two games of the crossing comparison at K = 14."""
    return runs.get((14,), (GameKind.MMSE_CODES, GameKind.SIC_POWER))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
