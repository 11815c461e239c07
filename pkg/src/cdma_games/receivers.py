"""Receive filters and output SINR / MSE for matched-filter, linear MMSE and SIC/MMSE reception.

Public functions take :class:`Scenario` / :class:`ReceiverBank` values.  The
``*_filters`` and ``*_sinrs`` helpers work on raw arrays and are what the
game iterations call in their inner loops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue, ZeroFilter
from .model import (
    ReceiverBank,
    Scenario,
    Strategy,
    SystemConfig,
    covariance,
    detection_order,
)


@dataclass(frozen=True)
class SinrReport:
    sinr: np.ndarray
    mse: np.ndarray
    tmse: float


# ---------------------------------------------------------------- arrays


def mmse_filters(S, amp, noise_var) -> np.ndarray:
    """Columns d_k = a_k C^-1 s_k with C the full data covariance."""
    C = covariance(S, amp**2, noise_var)
    return np.linalg.solve(C, S * amp)


def restricted_covariances(S, amp, noise_var, order) -> np.ndarray:
    """Stack of covariances seen at each detection stage.

    Entry ``j`` holds the covariance of users ``order[j:]`` plus noise.
    """
    N, K = S.shape
    Sq = S[:, order] * amp[order]
    outer = Sq.T[:, :, None] * Sq.T[:, None, :]
    # reverse cumulative sum: users not yet detected at stage j
    tail = np.cumsum(outer[::-1], axis=0)[::-1]
    tail += noise_var * np.eye(N)
    return tail


def sic_filters(S, amp, noise_var, order) -> np.ndarray:
    order = np.asarray(order)
    C = restricted_covariances(S, amp, noise_var, order)
    rhs = (S[:, order] * amp[order]).T[:, :, None]
    D = np.empty_like(S, dtype=float)
    D[:, order] = np.linalg.solve(C, rhs)[:, :, 0].T
    return D


def _cross_power(S, amp, D) -> np.ndarray:
    """G[k, i] = a_i^2 (d_k^T s_i)^2."""
    return (D.T @ S) ** 2 * amp**2


def _ratio(sig, den, amp, zero_ok):
    # a zero filter is legitimate for a silent user (its MMSE filter vanishes)
    dead = den <= 0
    if np.any(dead & (amp > 0)) and not zero_ok:
        bad = np.flatnonzero(dead & (amp > 0)).tolist()
        raise ZeroFilter(f"zero receive filter for active user(s) {bad}")
    return np.divide(sig, den, out=np.zeros_like(sig), where=~dead)


def linear_sinrs(S, amp, noise_var, D, zero_ok=False) -> np.ndarray:
    G = _cross_power(S, amp, D)
    sig = np.diag(G).copy()
    den = noise_var * np.einsum("ij,ij->j", D, D) + G.sum(axis=1) - sig
    return _ratio(sig, den, amp, zero_ok)


def sic_sinrs(S, amp, noise_var, D, order, zero_ok=False) -> np.ndarray:
    K = S.shape[1]
    pos = np.empty(K, dtype=int)
    pos[np.asarray(order, dtype=int)] = np.arange(K)
    later = pos[None, :] > pos[:, None]
    G = _cross_power(S, amp, D)
    den = noise_var * np.einsum("ij,ij->j", D, D) + np.sum(G * later, axis=1)
    return _ratio(np.diag(G).copy(), den, amp, zero_ok)


def mmse_sinrs_direct(S, amp, noise_var) -> np.ndarray:
    """Optimal-filter SINR a_k^2 s_k^T C_{-k}^-1 s_k through t = a_k^2 s_k^T C^-1 s_k."""
    C = covariance(S, amp**2, noise_var)
    t = amp**2 * np.einsum("ij,ij->j", S, np.linalg.solve(C, S))
    return t / (1.0 - t)


# ---------------------------------------------------------------- banks


def matched_filter(sc: Scenario) -> ReceiverBank:
    return ReceiverBank(sc.codes.copy(), Strategy.MATCHED_FILTER)


def mmse_receiver(sc: Scenario, config: SystemConfig) -> ReceiverBank:
    D = mmse_filters(np.asarray(sc.codes), sc.amplitudes, config.noise_var)
    return ReceiverBank(D, Strategy.LINEAR_MMSE)


def sic_receiver(sc: Scenario, config: SystemConfig) -> ReceiverBank:
    """SIC/MMSE bank: user detected at stage j is filtered against stages j..K-1 only."""
    order = detection_order(sc.gains)
    D = sic_filters(np.asarray(sc.codes), sc.amplitudes, config.noise_var, order)
    return ReceiverBank(D, Strategy.SIC_MMSE, order)


def sinr_linear(sc: Scenario, bank: ReceiverBank, k: int, config: SystemConfig) -> float:
    if bank.strategy is Strategy.SIC_MMSE:
        raise InvalidValue("sinr_linear needs a linear receiver bank", key="strategy")
    d = bank.filters[:, k]
    proj = (d @ sc.codes) ** 2 * sc.received_powers
    den = config.noise_var * (d @ d) + proj.sum() - proj[k]
    if not np.any(d) or den <= 0:
        raise ZeroFilter(f"user {k} has a zero receive filter")
    return float(proj[k] / den)


def sinr_sic(sc: Scenario, bank: ReceiverBank, k: int, config: SystemConfig) -> float:
    if bank.strategy is not Strategy.SIC_MMSE:
        raise InvalidValue("sinr_sic needs a SIC receiver bank", key="strategy")
    d = bank.filters[:, k]
    later = list(bank.order[bank.order.index(k) + 1:])
    proj = (d @ sc.codes) ** 2 * sc.received_powers
    den = config.noise_var * (d @ d) + proj[later].sum()
    if not np.any(d) or den <= 0:
        raise ZeroFilter(f"user {k} has a zero receive filter")
    return float(proj[k] / den)


def sinrs(sc: Scenario, bank: ReceiverBank, config: SystemConfig) -> np.ndarray:
    """Output SINR of every user under the bank's own strategy."""
    S, amp, D = np.asarray(sc.codes), sc.amplitudes, np.asarray(bank.filters)
    if bank.strategy is Strategy.SIC_MMSE:
        return sic_sinrs(S, amp, config.noise_var, D, bank.order)
    return linear_sinrs(S, amp, config.noise_var, D)


def mse_and_tmse(sc: Scenario, bank: ReceiverBank, config: SystemConfig) -> SinrReport:
    """Per-user MSE 1 + d^T C d - 2 a d^T s and their sum.

    ``C`` is the covariance the user's detector faces: the full data
    covariance for linear banks, the not-yet-cancelled users plus noise for
    SIC banks.
    """
    S, amp, D = np.asarray(sc.codes), sc.amplitudes, np.asarray(bank.filters)
    K = sc.n_users
    if bank.strategy is Strategy.SIC_MMSE:
        order = np.asarray(bank.order)
        C = restricted_covariances(S, amp, config.noise_var, order)
        Dk = D[:, order].T
        quad = np.empty(K)
        quad[order] = np.einsum("ki,kij,kj->k", Dk, C, Dk)
    else:
        C = covariance(S, amp**2, config.noise_var)
        quad = np.einsum("ik,ij,jk->k", D, C, D)
    mse = 1.0 + quad - 2.0 * amp * np.einsum("ij,ij->j", D, S)
    if bank.strategy is Strategy.SIC_MMSE:
        gam = sic_sinrs(S, amp, config.noise_var, D, bank.order, zero_ok=True)
    else:
        gam = linear_sinrs(S, amp, config.noise_var, D, zero_ok=True)
    return SinrReport(sinr=gam, mse=mse, tmse=float(mse.sum()))
