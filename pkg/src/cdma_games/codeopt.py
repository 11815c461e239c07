"""Alternating spreading-code / receiver optimization.

Linear receivers: filters are the MMSE bank, then each code is updated as

    s_k = a_k (a_k^2 D D^T + mu_k I)^+ d_k,   ||s_k|| = 1,

with ``a_k = sqrt(p_k) h_k``.  For SIC/MMSE reception the filter of the user
detected at stage j only sees stages j..K-1, and its code update uses the
filters of stages 0..j instead of the whole bank.  Both sweeps monotonically
decrease the corresponding total MSE.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import ZeroProjection
from .model import Scenario, SystemConfig, detection_order
from .numerics import RANK_TOL, EigenDecomposition, eigh_ascending, numerical_rank
from .receivers import linear_sinrs, mmse_filters, sic_filters, sic_sinrs

# components of d below this fraction of ||d|| are treated as absent
PROJ_TOL = 1e-12
SECULAR_TOL = 1e-14
SECULAR_MAX_ITERS = 100
START_JITTER = 1e-3


@dataclass(frozen=True)
class CodeOptResult:
    codes: np.ndarray
    filters: np.ndarray
    tmse_trace: tuple
    sweeps: int
    converged: bool


@numba.njit(cache=True)
def _secular_rows(lam, c, amp, mu, w):  # pragma: no cover - compiled
    K, N = lam.shape
    for k in range(K):
        a = amp[k]
        total = 0.0
        for i in range(N):
            total += c[k, i] * c[k, i]
        thr = PROJ_TOL * PROJ_TOL * total
        base = lam[k, 0]
        rel = np.empty(N, dtype=np.bool_)
        delta = np.empty(N)
        hi = 0.0
        cand = -np.inf
        dmax = 0.0
        for i in range(N):
            c2 = c[k, i] * c[k, i]
            rel[i] = c2 > thr
            delta[i] = lam[k, i] - base
            if rel[i]:
                hi += c2
                cand = max(cand, a * abs(c[k, i]) - delta[i])
                dmax = max(dmax, delta[i])
        hi = a * np.sqrt(hi)
        lo = max(max(cand, hi - dmax), 0.0)

        hard = False
        if lo <= 0.0:
            g0 = 0.0
            for i in range(N):
                if rel[i]:
                    if delta[i] <= 0.0:
                        g0 = np.inf
                        break
                    g0 += (a * c[k, i] / delta[i]) ** 2
            hard = g0 <= 1.0

        nu = lo
        if not hard:
            lo_b, hi_b = lo, hi
            for _ in range(SECULAR_MAX_ITERS):
                g2 = 0.0
                dg = 0.0
                for i in range(N):
                    if rel[i]:
                        den = delta[i] + nu
                        q2 = (a * c[k, i] / den) ** 2
                        g2 += q2
                        dg += q2 / den
                g = np.sqrt(g2)
                if abs(g - 1.0) <= SECULAR_TOL:
                    break
                # psi = 1/g - 1 increases with nu and is nearly linear near the root
                psi = 1.0 / g - 1.0
                if psi < 0.0:
                    lo_b = nu
                else:
                    hi_b = nu
                step = nu - psi * g2 * g / dg
                if not (lo_b < step < hi_b):
                    step = 0.5 * (lo_b + hi_b)
                if step == nu:
                    break
                nu = step

        sq = 0.0
        for i in range(N):
            if rel[i]:
                w[k, i] = a * c[k, i] / (delta[i] + nu)
                sq += w[k, i] * w[k, i]
            else:
                w[k, i] = 0.0
        if hard:
            w[k, 0] += np.sqrt(max(1.0 - sq, 0.0))
        mu[k] = nu - base


def _secular(lam, c, amp):
    """Solve a^2 sum_i c_i^2 / (lam_i + mu)^2 = 1 row by row.

    ``lam`` (K, N) holds the ascending eigenvalues of a_k^2 D D^T and ``c``
    the projections of d_k on the matching eigenvectors.  The root is taken
    on mu >= -min(lam), the branch on which a_k^2 D D^T + mu I is positive
    semidefinite and the code is the global minimizer of the user's MSE
    terms.  When d_k has no component along the smallest eigenvalue and the
    norm is still below one at the pole, the deficit is filled along that
    eigenvector.

    Works in nu = mu + min(lam): the root lies in [lo, a ||c||] with lo read
    off the largest single term, and safeguarded Newton steps on 1/g - 1
    finish it.

    Returns ``mu`` (K,) and coefficients ``w`` (K, N) such that the code is
    ``U w``.
    """
    lam = np.ascontiguousarray(lam, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    amp = np.ascontiguousarray(amp, dtype=float)
    total = np.einsum("ki,ki->k", c, c)
    bad = (total == 0) | (lam[:, -1] <= 0)
    if np.any(bad):
        raise ZeroProjection(f"filter has no usable projection for row(s) {np.flatnonzero(bad).tolist()}")
    mu = np.empty(lam.shape[0])
    w = np.empty_like(c)
    _secular_rows(lam, c, amp, mu, w)
    return mu, w


def mu_search(eig: EigenDecomposition, d, p: float, h: float):
    """Multiplier and unit-norm code for one user.

    ``eig`` decomposes ``p h^2 D D^T``; returns ``(mu, s)`` with
    ``s = sqrt(p) h (p h^2 D D^T + mu I)^+ d``.
    """
    lam = np.asarray(eig.eigenvalues, dtype=float)[::-1]
    U = np.asarray(eig.eigenvectors, dtype=float)[:, ::-1]
    top = np.max(np.abs(lam)) if lam.size else 0.0
    lam = np.where(np.abs(lam) <= RANK_TOL * top, 0.0, lam)
    c = U.T @ np.asarray(d, dtype=float)
    mu, w = _secular(lam[None, :], c[None, :], np.array([np.sqrt(p) * h]))
    s = U @ w[0]
    return float(mu[0]), s / np.linalg.norm(s)


def spread_start(S) -> np.ndarray:
    """Make a starting code matrix span as many dimensions as it can.

    The alternating updates never leave the column span of the starting
    codes, so a rank-deficient start (e.g. two equal +-1 sequences) would
    stall on a saddle point.  Such starts get a small fixed perturbation.
    """
    S = np.array(S, dtype=float)
    N, K = S.shape
    if K == 0 or numerical_rank(S) >= min(N, K):
        return S
    jitter = np.random.default_rng(0x5EED).standard_normal((N, K))
    S = S + START_JITTER * jitter
    return S / np.linalg.norm(S, axis=0)


def code_step_linear(S, amp, D) -> np.ndarray:
    """Update every code against the full filter bank ``D``."""
    S = np.array(S, dtype=float)
    live = amp > 0
    if not np.any(live):
        return S
    lam, U = eigh_ascending(D @ D.T)
    c = (U.T @ D[:, live]).T
    mu, w = _secular(amp[live, None] ** 2 * lam[None, :], c, amp[live])
    new = U @ w.T
    S[:, live] = new / np.linalg.norm(new, axis=0)
    return S


def code_step_sic(S, amp, D, order) -> np.ndarray:
    """Update the code detected at stage j against the filters of stages 0..j."""
    S = np.array(S, dtype=float)
    order = np.asarray(order)
    Dord = D[:, order].T  # (K, N), stage-major
    grams = np.cumsum(Dord[:, :, None] * Dord[:, None, :], axis=0)
    lam, U = eigh_ascending(grams)
    a = amp[order]
    live = a > 0
    if not np.any(live):
        return S
    c = np.einsum("kij,ki->kj", U[live], Dord[live])
    mu, w = _secular(a[live, None] ** 2 * lam[live], c, a[live])
    new = np.einsum("kij,kj->ki", U[live], w)
    new /= np.linalg.norm(new, axis=1, keepdims=True)
    S[:, order[live]] = new.T
    return S


def linear_tmse(S, amp, noise_var, D) -> float:
    return float(np.sum(1.0 / (1.0 + linear_sinrs(S, amp, noise_var, D, zero_ok=True))))


def sic_tmse(S, amp, noise_var, D, order) -> float:
    return float(np.sum(1.0 / (1.0 + sic_sinrs(S, amp, noise_var, D, order, zero_ok=True))))


def _displacement(S, S_next) -> float:
    return float(np.max(np.linalg.norm(S_next - S, axis=0), initial=0.0))


def _settled(trace, moved, tol) -> bool:
    # the functional has flattened out and the last code update barely moved anything
    return len(trace) > 1 and abs(trace[-2] - trace[-1]) <= tol * trace[-1] and moved <= tol


def tmse_sweep_linear(sc: Scenario, config: SystemConfig) -> CodeOptResult:
    """Iterate MMSE bank / code updates at fixed powers until TMSE settles.

    Stops once the relative TMSE change and the largest code-column move of
    the last update are both within ``config.tol_tmse``.
    """
    amp, nv = sc.amplitudes, config.noise_var
    S = spread_start(sc.codes)
    trace = []
    converged = False
    sweeps = 0
    moved = np.inf
    while True:
        D = mmse_filters(S, amp, nv)
        trace.append(linear_tmse(S, amp, nv, D))
        if _settled(trace, moved, config.tol_tmse):
            converged = True
            break
        if sweeps >= config.max_iters_tmse:
            break
        S_next = code_step_linear(S, amp, D)
        moved = _displacement(S, S_next)
        S = S_next
        sweeps += 1
    return CodeOptResult(S, D, tuple(trace), sweeps, converged)


def tmse_sweep_sic(sc: Scenario, config: SystemConfig) -> CodeOptResult:
    """SIC counterpart of :func:`tmse_sweep_linear`.

    The tracked functional is the sum over users of the MSE each SIC stage
    attains, sum_k 1/(1 + gamma_k), which the updates cannot increase.
    """
    amp, nv = sc.amplitudes, config.noise_var
    order = detection_order(sc.gains)
    S = spread_start(sc.codes)
    trace = []
    converged = False
    sweeps = 0
    moved = np.inf
    while True:
        D = sic_filters(S, amp, nv, order)
        trace.append(sic_tmse(S, amp, nv, D, order))
        if _settled(trace, moved, config.tol_tmse):
            converged = True
            break
        if sweeps >= config.max_iters_tmse:
            break
        S_next = code_step_sic(S, amp, D, order)
        moved = _displacement(S, S_next)
        S = S_next
        sweeps += 1
    return CodeOptResult(S, D, tuple(trace), sweeps, converged)
