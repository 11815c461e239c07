"""Nash equilibria of the four energy-efficiency games and checks on them.

Every game has the same power rule: a user whose SINR is linear in its own
power reaches the utility-maximizing SINR ``gbar`` by scaling its power by
``gbar / gamma``, capped at ``pmax``.  The games differ in the receiver
(linear MMSE or SIC/MMSE) and in whether users also adapt their spreading
codes.

The code games are run as one fixed-point map on (codes, log powers): one
receiver/code sweep followed by one power best response.  Anderson mixing
accelerates that map; the reported outcome is always a plain evaluation of
it, so saturated powers equal ``pmax`` exactly.
"""
from __future__ import annotations

import math
import enum
from dataclasses import dataclass

import numpy as np

from .codeopt import code_step_linear, code_step_sic, spread_start
from .errors import DeviationImproves, InvalidValue, MultipleEquilibria, ZeroSinr
from .model import Scenario, SystemConfig, covariance, detection_order
from .receivers import linear_sinrs, mmse_filters, sic_filters, sic_sinrs
from .utilityfn import UtilityParams, target_sinr, utility

# max code entry change below which the code part of the map has settled
CODE_SETTLE = 1e-7
ANDERSON_DEPTH = 8
ANDERSON_REG = 1e-10
# a mixed step that shrinks any code column below this norm is rejected
MIN_MIXED_NORM = 1e-3
DEVIATIONS = (0.5, 0.9, 1.1, 2.0)
NASH_SLACK = 1e-9
AGREE_TOL = 1e-4


class GameKind(enum.Enum):
    MMSE_BASELINE = "MmseBaseline"
    MMSE_CODES = "MmseCodes"
    SIC_POWER = "SicPower"
    SIC_CODES = "SicCodes"

    @property
    def adapts_codes(self) -> bool:
        return self in (GameKind.MMSE_CODES, GameKind.SIC_CODES)

    @property
    def uses_sic(self) -> bool:
        return self in (GameKind.SIC_POWER, GameKind.SIC_CODES)

    @classmethod
    def from_tag(cls, tag: str) -> "GameKind":
        for kind in cls:
            if tag.lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InvalidValue(f"unknown game {tag!r}; expected one of {[k.value for k in cls]}", key="game")


@dataclass(frozen=True, eq=False)
class GameOutcome:
    kind: GameKind
    powers: np.ndarray
    codes: np.ndarray
    filters: np.ndarray
    sinr: np.ndarray
    utility: np.ndarray  # bits/J
    saturated: np.ndarray
    order: tuple
    outer_iterations: int
    converged: bool


@dataclass(frozen=True)
class NashReport:
    checked: int
    improving: tuple  # (user, factor, u_star, u_deviation) per violation
    worst_gain: float  # max relative utility gain over all deviations

    @property
    def ok(self) -> bool:
        return not self.improving


@dataclass(frozen=True)
class ProbeReport:
    powers: tuple
    sinrs: tuple
    converged: tuple
    max_power_gap: float
    max_sinr_gap: float

    @property
    def agree(self) -> bool:
        return self.max_power_gap <= AGREE_TOL and self.max_sinr_gap <= AGREE_TOL


# ---------------------------------------------------------------- power rule


def _linear_response(S, h, p, noise_var, gbar, pmax):
    amp = np.sqrt(p) * h
    gam = linear_sinrs(S, amp, noise_var, mmse_filters(S, amp, noise_var), zero_ok=True)
    if np.any((gam <= 0) & (p > 0)):
        raise ZeroSinr(f"user(s) {np.flatnonzero((gam <= 0) & (p > 0)).tolist()} have zero SINR")
    return np.minimum(pmax, np.divide(p * gbar, gam, out=np.full_like(p, pmax), where=gam > 0))


def _sic_response(S, h, p, noise_var, gbar, pmax, order):
    """Exact best responses, last-detected user first.

    The SIC/MMSE SINR of the user at stage j is p h^2 s^T C_j^-1 s with C_j
    built from stages after j, so walking the order backwards gives every
    user the exact power for ``gbar`` given the powers already updated.
    """
    p = p.copy()
    N = S.shape[0]
    C = noise_var * np.eye(N)
    for k in reversed(order):
        s = S[:, k]
        gain = h[k] ** 2 * (s @ np.linalg.solve(C, s))
        if gain <= 0:
            raise ZeroSinr(f"user {k} has zero SINR")
        p[k] = min(pmax, gbar / gain)
        C += p[k] * h[k] ** 2 * np.outer(s, s)
    return p


def power_best_response(sc: Scenario, config: SystemConfig, kind: GameKind, gbar: float | None = None):
    """One power update of every user at the scenario's codes and powers."""
    if gbar is None:
        gbar = target_sinr(config.packet_len)
    S, h, p = np.asarray(sc.codes), np.asarray(sc.gains), np.asarray(sc.powers)
    if kind.uses_sic:
        return _sic_response(S, h, p, config.noise_var, gbar, config.pmax, detection_order(h))
    return _linear_response(S, h, p, config.noise_var, gbar, config.pmax)


# ---------------------------------------------------------------- game map


class _GameMap:
    def __init__(self, kind, h, config):
        self.kind = kind
        self.h = h
        self.nv = config.noise_var
        self.pmax = config.pmax
        self.gbar = target_sinr(config.packet_len)
        self.order = detection_order(h)

    def __call__(self, S, p):
        h, nv = self.h, self.nv
        if self.kind.adapts_codes:
            amp = np.sqrt(p) * h
            if self.kind.uses_sic:
                S = code_step_sic(S, amp, sic_filters(S, amp, nv, self.order), self.order)
            else:
                S = code_step_linear(S, amp, mmse_filters(S, amp, nv))
        if self.kind.uses_sic:
            p = _sic_response(S, h, p, nv, self.gbar, self.pmax, self.order)
        else:
            p = _linear_response(S, h, p, nv, self.gbar, self.pmax)
        return S, p


def _pack(S, p):
    return np.concatenate([S.ravel(), np.log(p)])


def _unpack(x, shape, pmax):
    S = x[: shape[0] * shape[1]].reshape(shape)
    norms = np.linalg.norm(S, axis=0)
    if np.any(norms < MIN_MIXED_NORM):
        return None
    return S / norms, np.minimum(np.exp(x[S.size:]), pmax)


def _settled(S, p, S2, p2, tol_power):
    return np.max(np.abs(p2 - p) / p) < tol_power and np.max(np.abs(S2 - S), initial=0.0) < CODE_SETTLE


def _iterate_plain(F, S, p, config):
    for it in range(1, config.max_iters_power + 1):
        S2, p2 = F(S, p)
        if _settled(S, p, S2, p2, config.tol_power):
            return S2, p2, it, True
        S, p = S2, p2
    return S, p, config.max_iters_power, False


def _iterate_anderson(F, S, p, config):
    """Type-II Anderson mixing with restart whenever the residual grows."""
    xs, fs = [], []
    x = _pack(S, p)
    last = np.inf
    for it in range(1, config.max_iters_power + 1):
        S2, p2 = F(S, p)
        if _settled(S, p, S2, p2, config.tol_power):
            return S2, p2, it, True
        fx = _pack(S2, p2)
        r = fx - x
        rn = np.linalg.norm(r)
        if rn > last:
            xs, fs = [], []
        last = rn
        xs.append(x)
        fs.append(fx)
        if len(xs) > ANDERSON_DEPTH + 1:
            xs.pop(0)
            fs.pop(0)
        nxt = fx
        if len(xs) >= 2:
            F_hist = np.array(fs).T
            R = F_hist - np.array(xs).T
            dR, dF = np.diff(R, axis=1), np.diff(F_hist, axis=1)
            A = dR.T @ dR
            coef = np.linalg.solve(A + ANDERSON_REG * np.trace(A) * np.eye(len(A)), dR.T @ r)
            mixed = _unpack(fx - dF @ coef, S.shape, config.pmax)
            if mixed is not None:
                nxt = _pack(*mixed)
        S, p = _unpack(nxt, S.shape, config.pmax)
        x = _pack(S, p)
    return S, p, config.max_iters_power, False


def run_game(sc: Scenario, config: SystemConfig, kind: GameKind) -> GameOutcome:
    """Iterate receivers, codes (code games only) and powers to equilibrium.

    Starts from the scenario's codes and powers.  A run that hits
    ``config.max_iters_power`` is returned with ``converged=False``.
    """
    h = np.asarray(sc.gains, dtype=float)
    S = np.array(sc.codes, dtype=float)
    p = np.array(sc.powers, dtype=float)
    if np.any(p <= 0):
        raise InvalidValue("starting powers must be positive", key="powers")
    F = _GameMap(kind, h, config)
    if kind.adapts_codes:
        S = spread_start(S)
        S, p, iters, ok = _iterate_anderson(F, S, p, config)
    else:
        S, p, iters, ok = _iterate_plain(F, S, p, config)
    return _outcome(kind, S, p, h, F.order, config, iters, ok)


def _outcome(kind, S, p, h, order, config, iters, ok):
    amp = np.sqrt(p) * h
    nv = config.noise_var
    if kind.uses_sic:
        D = sic_filters(S, amp, nv, order)
        gam = sic_sinrs(S, amp, nv, D, order)
    else:
        D = mmse_filters(S, amp, nv)
        gam = linear_sinrs(S, amp, nv, D)
    u = utility(gam, p, UtilityParams.from_config(config))
    return GameOutcome(
        kind=kind,
        powers=p,
        codes=S,
        filters=D,
        sinr=gam,
        utility=u,
        saturated=p >= config.pmax,
        order=tuple(order) if kind.uses_sic else tuple(range(len(h))),
        outer_iterations=iters,
        converged=ok,
    )


# ---------------------------------------------------------------- checks


def _own_gain(S, q, k, later, noise_var):
    """s_k^T C^-1 s_k with C from users ``later`` (received powers ``q``) plus noise."""
    C = covariance(S[:, later], q[later], noise_var)
    s = S[:, k]
    return float(s @ np.linalg.solve(C, s))


def _log_utility(gamma, p, M) -> float:
    """log of the utility up to its constant scale."""
    return M * math.log(-math.expm1(-gamma)) - math.log(p)


def verify_nash(
    outcome: GameOutcome,
    sc: Scenario,
    config: SystemConfig,
    kind: GameKind | None = None,
    factors=DEVIATIONS,
    strict: bool = True,
) -> NashReport:
    """Try unilateral power deviations against an equilibrium.

    User k scales its power by each factor (capped at pmax) while everyone
    else keeps their codes and powers; k's own receiver is re-optimized,
    which makes its SINR linear in its power.
    """
    kind = kind or outcome.kind
    params = UtilityParams.from_config(config)
    S, h, p = outcome.codes, np.asarray(sc.gains), outcome.powers
    q = p * h**2
    K = len(p)
    pos = {k: j for j, k in enumerate(outcome.order)}
    improving = []
    worst = -np.inf
    checked = 0
    for k in range(K):
        if kind.uses_sic:
            later = [i for i in outcome.order if pos[i] > pos[k]]
        else:
            later = [i for i in range(K) if i != k]
        g1 = h[k] ** 2 * _own_gain(S, q, k, later, config.noise_var)
        u_star = float(utility(p[k] * g1, p[k], params))
        log_star = _log_utility(p[k] * g1, p[k], params.M)
        for delta in factors:
            pk = min(delta * p[k], config.pmax)
            u_dev = float(utility(pk * g1, pk, params))
            checked += 1
            # ratio in the log domain: deep-faded users at pmax have utilities that underflow to 0
            gain = math.expm1(_log_utility(pk * g1, pk, params.M) - log_star)
            worst = max(worst, gain)
            if gain > NASH_SLACK:
                improving.append((k, float(delta), u_star, u_dev))
    report = NashReport(checked=checked, improving=tuple(improving), worst_gain=float(worst))
    if strict and improving:
        raise DeviationImproves(f"{len(improving)} improving deviation(s), first {improving[0]}")
    return report


def equilibrium_uniqueness_probe(
    sc: Scenario,
    config: SystemConfig,
    kind: GameKind,
    n_starts: int = 5,
    seed: int = 0,
    strict: bool = True,
) -> ProbeReport:
    """Run a game from several random starts and compare p* and gamma*.

    Starting powers are log-uniform on [pmax/1000, pmax]; code games also get
    fresh random +-1/sqrt(N) starting codes.  Codes themselves are not
    compared since they are determined only up to rotations.
    """
    if n_starts < 2:
        raise InvalidValue("n_starts must be >= 2", key="n_starts")
    rng = np.random.default_rng(seed)
    N, K = sc.dim, sc.n_users
    outs = []
    for _ in range(n_starts):
        p0 = config.pmax * 10.0 ** rng.uniform(-3.0, 0.0, K)
        codes = sc.codes
        if kind.adapts_codes:
            codes = rng.choice([-1.0, 1.0], size=(N, K)) / np.sqrt(N)
        start = Scenario(gains=sc.gains, codes=np.asarray(codes), powers=p0, distances=sc.distances)
        outs.append(run_game(start, config, kind))
    ref = outs[0]
    p_gap = max(float(np.max(np.abs(o.powers - ref.powers) / ref.powers)) for o in outs)
    g_gap = max(float(np.max(np.abs(o.sinr - ref.sinr) / ref.sinr)) for o in outs)
    report = ProbeReport(
        powers=tuple(o.powers for o in outs),
        sinrs=tuple(o.sinr for o in outs),
        converged=tuple(o.converged for o in outs),
        max_power_gap=p_gap,
        max_sinr_gap=g_gap,
    )
    if strict and not report.agree:
        raise MultipleEquilibria(f"starts disagree: power gap {p_gap:.3g}, SINR gap {g_gap:.3g}")
    return report
