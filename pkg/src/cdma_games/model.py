"""System parameters and per-realization state of the synchronous CDMA uplink.

The received chip vector for one symbol interval is ``r = S P^(1/2) H b + n``
with ``n ~ N(0, (N0/2) I_N)``.  Everything here is an immutable value type.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyUserSet,
    InvalidValue,
    NonPositiveGain,
    NonUnitCode,
)

CODE_NORM_REPAIR = 1e-6


@dataclass(frozen=True)
class SystemConfig:
    processing_gain: int = 7  # N, chips per symbol
    packet_len: int = 120  # M, symbols per packet
    info_len: int | None = None  # L, defaults to M
    rate: float = 1e5  # R, bits/s
    noise_psd: float = 1e-9  # N0, W/Hz
    pmax: float = 10 ** 2.5  # W (25 dBW)
    tol_power: float = 1e-6
    tol_tmse: float = 1e-9
    max_iters_power: int = 20000
    max_iters_tmse: int = 500

    def __post_init__(self):
        if self.info_len is None:
            object.__setattr__(self, "info_len", self.packet_len)
        checks = [
            (self.processing_gain >= 1, "processing_gain", "must be >= 1"),
            (self.packet_len >= 2, "packet_len", "must be >= 2"),
            (1 <= self.info_len <= self.packet_len, "info_len", "must be in [1, packet_len]"),
            (self.rate > 0, "rate", "must be > 0"),
            (self.noise_psd > 0, "noise_psd", "must be > 0"),
            (self.pmax > 0, "pmax", "must be > 0"),
            (self.tol_power > 0, "tol_power", "must be > 0"),
            (self.tol_tmse > 0, "tol_tmse", "must be > 0"),
            (self.max_iters_power >= 1, "max_iters_power", "must be >= 1"),
            (self.max_iters_tmse >= 1, "max_iters_tmse", "must be >= 1"),
        ]
        for ok, key, msg in checks:
            if not ok:
                raise InvalidValue(f"{key} {msg}", key=key)

    @property
    def noise_var(self) -> float:
        """Per-dimension noise variance N0/2."""
        return 0.5 * self.noise_psd

    @property
    def pmax_dbw(self) -> float:
        return 10.0 * math.log10(self.pmax)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    """One channel realization together with the users' current strategies.

    Build instances through :func:`new_scenario`, which validates them.
    """

    gains: np.ndarray  # (K,) real amplitudes h_k
    codes: np.ndarray  # (N, K) unit-norm columns
    powers: np.ndarray  # (K,) watts
    distances: np.ndarray | None = None  # metadata only

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def dim(self) -> int:
        return self.codes.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        """Received amplitudes sqrt(p_k) h_k."""
        return np.sqrt(self.powers) * self.gains

    @property
    def received_powers(self) -> np.ndarray:
        """Received powers p_k h_k^2."""
        return self.powers * self.gains**2

    def with_powers(self, powers) -> "Scenario":
        p = _frozen(powers)
        if p.shape != self.gains.shape:
            raise DimensionMismatch(f"powers shape {p.shape} != {self.gains.shape}")
        if np.any(p < 0):
            raise InvalidValue("powers must be non-negative", key="powers")
        return replace(self, powers=p)

    def with_codes(self, codes) -> "Scenario":
        return replace(self, codes=_check_codes(codes, self.dim, self.n_users))


class Strategy(enum.Enum):
    MATCHED_FILTER = "MatchedFilter"
    LINEAR_MMSE = "LinearMMSE"
    SIC_MMSE = "SicMMSE"


@dataclass(frozen=True, eq=False)
class ReceiverBank:
    filters: np.ndarray  # (N, K), column k is d_k
    strategy: Strategy
    order: tuple = field(default=())  # detection order (0-based user indices)

    def __post_init__(self):
        K = self.filters.shape[1]
        order = tuple(int(i) for i in (self.order if len(self.order) else range(K)))
        if sorted(order) != list(range(K)):
            raise InvalidValue(f"order {order} is not a permutation of 0..{K - 1}", key="order")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "filters", _frozen(self.filters))


def detection_order(gains) -> tuple:
    """User indices sorted by non-increasing gain, ties by ascending index."""
    return tuple(int(i) for i in np.argsort(-np.asarray(gains), kind="stable"))


def _check_codes(codes, n, k) -> np.ndarray:
    S = np.array(codes, dtype=float)
    if S.ndim == 1 and k == 1:
        S = S[:, None]
    if S.shape != (n, k):
        raise DimensionMismatch(f"codes shape {S.shape} != {(n, k)}")
    if k:
        norms = np.linalg.norm(S, axis=0)
        bad = np.abs(norms - 1.0) > CODE_NORM_REPAIR
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise NonUnitCode(f"code {j} has norm {norms[j]:.6g}")
        S = S / norms
    S.setflags(write=False)
    return S


def new_scenario(config: SystemConfig, gains, codes, powers, distances=None) -> Scenario:
    h = np.atleast_1d(np.array(gains, dtype=float))
    if h.ndim != 1:
        raise DimensionMismatch("gains must be a vector")
    K = h.shape[0]
    p = np.atleast_1d(np.array(powers, dtype=float))
    if p.shape != (K,):
        raise DimensionMismatch(f"powers shape {p.shape} != {(K,)}")
    if np.any(h <= 0) or not np.all(np.isfinite(h)):
        raise NonPositiveGain("all channel gains must be positive and finite")
    if np.any(p < 0) or np.any(p > config.pmax * (1 + 1e-12)):
        raise InvalidValue("powers must lie in [0, pmax]", key="powers")
    S = _check_codes(codes, config.processing_gain, K)
    d = None
    if distances is not None:
        d = _frozen(np.atleast_1d(distances))
        if d.shape != (K,):
            raise DimensionMismatch(f"distances shape {d.shape} != {(K,)}")
    return Scenario(gains=_frozen(h), codes=S, powers=_frozen(np.minimum(p, config.pmax)), distances=d)


def covariance(codes, received_powers, noise_var) -> np.ndarray:
    """S diag(q) S^T + noise_var I for raw arrays."""
    S = np.asarray(codes)
    C = (S * received_powers) @ S.T
    C[np.diag_indices_from(C)] += noise_var
    return C


def data_covariance(sc: Scenario, config: SystemConfig) -> np.ndarray:
    C = covariance(sc.codes, sc.received_powers, config.noise_var)
    return 0.5 * (C + C.T)


def restricted_covariance(sc: Scenario, config: SystemConfig, user_set) -> np.ndarray:
    """Covariance built from the listed users only, plus noise."""
    idx = np.unique(np.asarray(list(user_set), dtype=int))
    if idx.size == 0:
        raise EmptyUserSet("user_set must be non-empty")
    if idx[0] < 0 or idx[-1] >= sc.n_users:
        raise DimensionMismatch(f"user indices must lie in 0..{sc.n_users - 1}")
    C = covariance(sc.codes[:, idx], sc.received_powers[idx], config.noise_var)
    return 0.5 * (C + C.T)
