"""Efficiency function, packet success probability and energy-efficiency utility."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import InvalidValue, NoPositiveRoot, ZeroPower
from .numerics import expand_bracket, find_root_bisect


@dataclass(frozen=True)
class UtilityParams:
    M: int = 120  # packet length (symbols)
    L: int | None = None  # information symbols per packet, defaults to M
    R: float = 1e5  # bits/s

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", self.M)
        if self.M < 2:
            raise InvalidValue("M must be >= 2", key="M")
        if not 1 <= self.L <= self.M:
            raise InvalidValue("L must lie in [1, M]", key="L")
        if self.R <= 0:
            raise InvalidValue("R must be positive", key="R")

    @classmethod
    def from_config(cls, config) -> "UtilityParams":
        return cls(M=config.packet_len, L=config.info_len, R=config.rate)

    @property
    def scale(self) -> float:
        """R L / M, bits/s delivered per unit of efficiency."""
        return self.R * self.L / self.M


def q_function(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def packet_success(gamma, M: int):
    """Error-free packet probability for uncoded BPSK, [1 - Q(sqrt(2 gamma))]^M."""
    g = np.asarray(gamma, dtype=float)
    return np.exp(M * np.log1p(-q_function(np.sqrt(2.0 * g))))


def efficiency(gamma, M: int):
    """(1 - exp(-gamma))^M evaluated as exp(M log1p(-exp(-gamma)))."""
    g = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.exp(M * np.log1p(-np.exp(-g)))
    return out


def efficiency_prime(gamma, M: int):
    g = np.asarray(gamma, dtype=float)
    if M == 1:
        return np.exp(-g)
    with np.errstate(divide="ignore"):
        out = M * np.exp(-g + (M - 1) * np.log1p(-np.exp(-g)))
    return out


@lru_cache(maxsize=64)
def target_sinr(M: int) -> float:
    """Unique positive root of f(g) = g f'(g), i.e. of exp(g) - 1 = M g."""
    if M < 2:
        raise NoPositiveRoot(f"exp(g) - 1 = {M} g has no positive root for M < 2")

    def h(g):
        # (exp(g) - 1 - M g) / g keeps the magnitude moderate near the root
        return math.expm1(g) / g - M

    lo = math.log(M)  # h(log M) = (M - 1)/log M - M < 0 for M >= 2
    lo, hi = expand_bracket(h, lo, 2.0 * lo + 1.0, direction="up")
    return find_root_bisect(h, lo, hi, tol=1e-14 * hi)


def throughput(gamma, params: UtilityParams):
    return params.scale * efficiency(gamma, params.M)


def utility(gamma, p, params: UtilityParams):
    """Bits per Joule: R (L/M) f(gamma) / p."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ZeroPower("utility is undefined at zero transmit power")
    return throughput(gamma, params) / p
