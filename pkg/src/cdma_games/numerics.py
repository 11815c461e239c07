"""Small dense symmetric kernels and scalar root finding.

LAPACK (through numpy/scipy) does the factorizations; this module adds the
input checks, ordering conventions and bracketing logic the rest of the
package relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    BracketNotFound,
    NoConvergence,
    NoSignChange,
    NotPositiveDefinite,
    NotSymmetric,
)

SYM_TOL = 1e-9
# eigenvalues below this fraction of the largest are treated as exact zeros
RANK_TOL = 1e-12
ROOT_TOL = 1e-10
MAX_EXPANSIONS = 200


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        U, lam = self.eigenvectors, self.eigenvalues
        return (U * lam) @ U.T


def sym_eig(A) -> EigenDecomposition:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    if A.size and np.max(np.abs(A - A.T)) > SYM_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-9")
    try:
        lam, U = np.linalg.eigh(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenDecomposition(lam[::-1].copy(), U[:, ::-1].copy())


def eigh_ascending(stack) -> tuple[np.ndarray, np.ndarray]:
    """Batched symmetric eigendecomposition, eigenvalues ascending.

    Eigenvalues smaller than ``RANK_TOL`` times the largest one of the same
    matrix are clamped to zero.
    """
    try:
        lam, U = np.linalg.eigh(stack)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    top = np.max(np.abs(lam), axis=-1, keepdims=True)
    lam = np.where(np.abs(lam) <= RANK_TOL * top, 0.0, lam)
    return lam, U


def numerical_rank(M, rel_tol: float = RANK_TOL) -> int:
    sv = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol**0.5 * sv[0]))


def spd_solve(A, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A (Cholesky)."""
    A = np.asarray(A, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=float), check_finite=False)


def find_root_bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Bisection on a sign-changing bracket; returns the midpoint of the final bracket."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise NoSignChange(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} have the same sign")
    if lo > hi:
        lo, hi, flo, fhi = hi, lo, fhi, flo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval at floating-point resolution
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def expand_bracket(
    f: Callable[[float], float],
    seed_lo: float,
    seed_hi: float,
    direction: str = "up",
    factor: float = 2.0,
    max_expansions: int = MAX_EXPANSIONS,
) -> tuple[float, float]:
    """Grow ``[seed_lo, seed_hi]`` until ``f`` changes sign across it.

    ``direction="up"`` doubles the upper end, ``"down"`` pushes the lower end
    away by the same rule, ``"both"`` alternates.
    """
    if direction not in ("up", "down", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    lo, hi = float(seed_lo), float(seed_hi)
    flo, fhi = f(lo), f(hi)
    for i in range(max_expansions):
        if flo * fhi <= 0:
            return lo, hi
        width = hi - lo
        if direction == "up" or (direction == "both" and i % 2 == 0):
            lo, flo = hi, fhi
            hi = hi + (factor - 1.0) * max(width, abs(hi), 1e-300)
            fhi = f(hi)
        else:
            hi, fhi = lo, flo
            lo = lo - (factor - 1.0) * max(width, abs(lo), 1e-300)
            flo = f(lo)
    if flo * fhi <= 0:
        return lo, hi
    raise BracketNotFound(f"no sign change after {max_expansions} expansions")
