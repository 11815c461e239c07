"""Random single-cell scenarios and equilibrium statistics over many trials."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import GameKind, GameOutcome, run_game
from .errors import CdmaGameError, EmptyCell, InvalidValue
from .model import Scenario, SystemConfig, new_scenario

log = logging.getLogger(__name__)

CELL_MIN = 10.0  # m
CELL_MAX = 500.0  # m
SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class TrialSpec:
    seed: int
    K: int
    config: SystemConfig = field(default_factory=SystemConfig)
    cell_min: float = CELL_MIN
    cell_max: float = CELL_MAX

    def __post_init__(self):
        if not 0 < self.cell_min < self.cell_max:
            raise InvalidValue("need 0 < cell_min < cell_max", key="cell_min")
        if self.K < 1:
            raise InvalidValue("K must be >= 1", key="K")


@dataclass(frozen=True)
class CellStats:
    game: GameKind
    K: int
    trials: int  # trials that entered the averages
    mean_utility: float  # bits/J
    se_utility: float
    mean_power_w: float
    mean_power_dbw: float
    se_power: float
    mean_sinr: float
    mean_sinr_db: float
    frac_pmax: float
    dropped_trials: int


@dataclass(frozen=True)
class AggregateStats:
    cells: tuple

    def cell(self, game: GameKind, K: int) -> CellStats:
        for c in self.cells:
            if c.game is game and c.K == K:
                return c
        raise KeyError((game, K))

    @property
    def games(self) -> tuple:
        return tuple(dict.fromkeys(c.game for c in self.cells))

    @property
    def user_counts(self) -> tuple:
        return tuple(sorted({c.K for c in self.cells}))


def trial_seed(base_seed: int, t: int) -> int:
    return (int(base_seed) ^ int(t)) & SEED_MASK


def sample_scenario(spec: TrialSpec) -> Scenario:
    """Users uniform in distance, Rayleigh amplitudes with mean d^-2, random +-1/sqrt(N) codes."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    cfg = spec.config
    N, K = cfg.processing_gain, spec.K
    d = rng.uniform(spec.cell_min, spec.cell_max, K)
    h = rng.rayleigh(d**-2.0 * math.sqrt(2.0 / math.pi))
    codes = rng.choice([-1.0, 1.0], size=(N, K)) / math.sqrt(N)
    return new_scenario(cfg, h, codes, np.full(K, cfg.pmax / 10.0), distances=d)


def run_trial(spec: TrialSpec, games) -> tuple | None:
    """All requested games on one shared scenario; None if any of them fails."""
    sc = sample_scenario(spec)
    outs = []
    for g in games:
        try:
            out = run_game(sc, spec.config, g)
        except CdmaGameError as exc:
            log.warning("trial seed=%d K=%d game=%s failed: %s", spec.seed, spec.K, g.value, exc)
            return None
        if not out.converged:
            log.warning("trial seed=%d K=%d game=%s did not converge", spec.seed, spec.K, g.value)
            return None
        outs.append(out)
    return tuple(outs)


def _run_trial_args(args):
    return run_trial(*args)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), se


def aggregate(outcomes, dropped=None) -> AggregateStats:
    """Per-(game, K) statistics from lists of converged outcomes.

    ``outcomes`` maps ``(GameKind, K)`` to a list of outcomes, one per trial.
    Each trial is first averaged over its users.
    """
    dropped = dropped or {}
    cells = []
    for (game, K), outs in outcomes.items():
        if not outs:
            raise EmptyCell(f"no converged trials for {game.value} at K={K}")
        u = [float(np.mean(o.utility)) for o in outs]
        p = [float(np.mean(o.powers)) for o in outs]
        g = [float(np.mean(o.sinr)) for o in outs]
        sat = sum(int(np.sum(o.saturated)) for o in outs)
        users = sum(len(o.powers) for o in outs)
        mu, su = _mean_se(u)
        mp, sp = _mean_se(p)
        mg, _ = _mean_se(g)
        cells.append(
            CellStats(
                game=game,
                K=K,
                trials=len(outs),
                mean_utility=mu,
                se_utility=su,
                mean_power_w=mp,
                mean_power_dbw=10.0 * math.log10(mp),
                se_power=sp,
                mean_sinr=mg,
                mean_sinr_db=10.0 * math.log10(mg),
                frac_pmax=sat / users,
                dropped_trials=int(dropped.get(K, 0)),
            )
        )
    return AggregateStats(cells=tuple(cells))


def run_experiment(
    K_list,
    game_list,
    trials: int,
    base_seed: int,
    config: SystemConfig,
    cell_min: float = CELL_MIN,
    cell_max: float = CELL_MAX,
    workers: int = 1,
    keep_outcomes: bool = False,
):
    """Paired Monte Carlo sweep.

    Trial t at user count K uses the scenario seeded by ``base_seed ^ t`` for
    every game.  A trial where any game fails is dropped from all games.
    Results do not depend on ``workers``.  With ``keep_outcomes`` the raw
    per-trial outcomes are returned as well.
    """
    if trials < 1:
        raise InvalidValue("trials must be >= 1", key="trials")
    games = tuple(game_list)
    jobs = [
        (TrialSpec(trial_seed(base_seed, t), K, config, cell_min, cell_max), games)
        for K in K_list
        for t in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial_args, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [_run_trial_args(j) for j in jobs]

    outcomes = {(g, K): [] for K in K_list for g in games}
    dropped = {K: 0 for K in K_list}
    for (spec, _), res in zip(jobs, results):
        if res is None:
            dropped[spec.K] += 1
            continue
        for g, out in zip(games, res):
            outcomes[(g, spec.K)].append(out)
    for K, n in dropped.items():
        if n:
            log.info("K=%d: dropped %d of %d trials", K, n, trials)
    stats = aggregate(outcomes, dropped)
    return (stats, outcomes) if keep_outcomes else stats


__all__ = [
    "TrialSpec",
    "CellStats",
    "AggregateStats",
    "GameOutcome",
    "sample_scenario",
    "run_trial",
    "run_experiment",
    "aggregate",
    "trial_seed",
]
