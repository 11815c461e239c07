import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from cdma_games.codeopt import code_step_linear, code_step_sic, mu_search, spread_start, tmse_sweep_linear, tmse_sweep_sic
from cdma_games.errors import ZeroProjection
from cdma_games.model import SystemConfig, detection_order, new_scenario
from cdma_games.numerics import numerical_rank, sym_eig
from cdma_games.receivers import linear_sinrs, mmse_filters, sic_filters

CFG = SystemConfig()


def unit(v):
    return v / np.linalg.norm(v)


def random_codes(rng, N, K):
    return rng.choice([-1.0, 1.0], (N, K)) / np.sqrt(N)


def equal_user_scenario(rng, K, N=7, h=1e-4, p=1.0):
    return new_scenario(CFG, np.full(K, h), random_codes(rng, N, K), np.full(K, p))


def user_objective(s, A, a, d):
    # the part of the total MSE that depends on one user's code
    return s @ A @ s - 2 * a * d @ s


def test_mu_search_isotropic():
    d = unit(np.array([1.0, 2.0, -0.5]))
    mu, s = mu_search(sym_eig(4 * np.eye(3)), d, 4.0, 1.0)
    assert mu == pytest.approx(-2.0, abs=1e-12)
    np.testing.assert_allclose(s, d, atol=1e-12)
    mu, s = mu_search(sym_eig(np.eye(3)), d, 1.0, 1.0)
    assert mu == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(s, d, atol=1e-12)


def test_mu_search_zero_projection():
    with pytest.raises(ZeroProjection):
        mu_search(sym_eig(np.zeros((3, 3))), np.zeros(3), 1.0, 1.0)
    with pytest.raises(ZeroProjection):
        mu_search(sym_eig(np.zeros((3, 3))), np.array([1.0, 0.0, 0.0]), 1.0, 1.0)


def test_mu_search_norm_is_monotone_on_branch():
    rng = np.random.default_rng(7)
    D = rng.standard_normal((5, 8))
    A = D @ D.T
    e = sym_eig(A)
    d = D[:, 3]
    mu, s = mu_search(e, d, 1.0, 1.0)
    assert np.linalg.norm(s) == pytest.approx(1.0, abs=1e-9)
    lam, U = e.eigenvalues, e.eigenvectors
    c = U.T @ d
    grid = np.linspace(-lam.min() + 1e-6, mu + 10 * abs(mu) + 1, 50)
    g = [np.linalg.norm(c / (lam + m)) for m in grid]
    assert np.all(np.diff(g) < 0)
    assert np.linalg.norm(c / (lam + mu)) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(-2, 2))
def test_mu_search_is_global_minimizer(seed, K, log_a):
    rng = np.random.default_rng(seed)
    N = 5
    D = rng.standard_normal((N, K)) * 10.0 ** rng.uniform(-1, 1, K)
    d = D[:, 0]
    a = 10.0**log_a
    A = a * a * D @ D.T
    _, s = mu_search(sym_eig(A), d, a * a, 1.0)
    ours = user_objective(s, A, a, d)
    # independent check: local search on the sphere from many starts
    best = np.inf
    for _ in range(20):
        x0 = rng.standard_normal(N)
        res = minimize(lambda x: user_objective(unit(x), A, a, d), x0, method="BFGS")
        best = min(best, res.fun)
    assert ours <= best + 1e-8 * max(1.0, abs(best))


def test_rank_deficient_filter_bank():
    # a single filter with a(A^+ d) shorter than one: part of the code moves
    # into the null space of A, which lowers the objective below s = d
    d = unit(np.array([1.0, 1.0, 0.0, 0.0]))
    a = np.sqrt(3.0)
    A = 3.0 * np.outer(d, d)
    mu, s = mu_search(sym_eig(A), d, 3.0, 1.0)
    assert mu == pytest.approx(0.0, abs=1e-12)
    assert s @ d == pytest.approx(1 / np.sqrt(3), abs=1e-12)
    assert np.linalg.norm(s) == pytest.approx(1.0, abs=1e-12)
    assert user_objective(s, A, a, d) == pytest.approx(-1.0, abs=1e-12)
    assert user_objective(s, A, a, d) < user_objective(d, A, a, d)


def test_spread_start_repairs_only_deficient_starts():
    rng = np.random.default_rng(0)
    S = random_codes(rng, 7, 5)
    np.testing.assert_array_equal(spread_start(S), S)
    S[:, 1] = S[:, 0]
    R = spread_start(S)
    assert numerical_rank(R) == 5
    np.testing.assert_allclose(np.linalg.norm(R, axis=0), 1.0)
    np.testing.assert_array_equal(spread_start(S), R)


def test_single_user_sweep():
    rng = np.random.default_rng(1)
    sc = equal_user_scenario(rng, 1)
    res = tmse_sweep_linear(sc, CFG)
    assert res.converged and res.sweeps <= 2
    single = 2 * sc.received_powers[0] / CFG.noise_psd
    assert res.tmse_trace[-1] == pytest.approx(1 / (1 + single), rel=1e-12)
    d = res.filters[:, 0]
    assert abs(unit(d) @ res.codes[:, 0]) == pytest.approx(1.0, abs=1e-12)
    sic = tmse_sweep_sic(sc, CFG)
    np.testing.assert_allclose(sic.codes, res.codes, atol=1e-12)


@pytest.mark.parametrize("K", [2, 4, 7])
def test_equal_users_become_orthogonal(K):
    rng = np.random.default_rng(K)
    sc = equal_user_scenario(rng, K)
    res = tmse_sweep_linear(sc, CFG)
    assert res.converged
    G = res.codes.T @ res.codes
    assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-4
    np.testing.assert_allclose(np.linalg.norm(res.codes, axis=0), 1.0, atol=1e-9)
    amp = sc.amplitudes
    gam = linear_sinrs(res.codes, amp, CFG.noise_var, res.filters)
    np.testing.assert_allclose(gam, 2 * sc.received_powers / CFG.noise_psd, rtol=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_tmse_trace_non_increasing(seed, K):
    rng = np.random.default_rng(seed)
    h = 10.0 ** rng.uniform(-5, -3.5, K)
    p = 10.0 ** rng.uniform(-1, 2, K)
    sc = new_scenario(CFG, h, random_codes(rng, 7, K), p)
    cfg = SystemConfig(max_iters_tmse=60)
    for res in (tmse_sweep_linear(sc, cfg), tmse_sweep_sic(sc, cfg)):
        t = np.array(res.tmse_trace)
        assert np.all(np.diff(t) <= 1e-12 * t[:-1])
        np.testing.assert_allclose(np.linalg.norm(res.codes, axis=0), 1.0, atol=1e-9)


def test_fixed_point_is_update_stable():
    rng = np.random.default_rng(3)
    sc = equal_user_scenario(rng, 5)
    res = tmse_sweep_linear(sc, CFG)
    amp = sc.amplitudes
    again = code_step_linear(res.codes, amp, mmse_filters(res.codes, amp, CFG.noise_var))
    assert np.max(np.linalg.norm(again - res.codes, axis=0)) < 10 * CFG.tol_tmse


def test_oversaturated_gram_rank():
    rng = np.random.default_rng(4)
    sc = equal_user_scenario(rng, 10)
    res = tmse_sweep_linear(sc, SystemConfig(max_iters_tmse=200))
    ev = np.linalg.eigvalsh(res.codes @ res.codes.T)
    assert np.sum(ev > 1e-12 * ev.max()) <= 7
    # never below the TMSE of codes with S S^T = (K/N) I (even spreading)
    q, nv = sc.received_powers[0], CFG.noise_var
    floor = 10 - 7 + 7 * nv / (q * 10 / 7 + nv)
    assert res.tmse_trace[-1] >= floor * (1 - 1e-12)


def test_sic_step_uses_prefix_filters():
    rng = np.random.default_rng(5)
    K = 5
    h = 10.0 ** rng.uniform(-5, -3.5, K)
    p = 10.0 ** rng.uniform(-1, 2, K)
    S = random_codes(rng, 7, K)
    amp = np.sqrt(p) * h
    order = detection_order(h)
    D = sic_filters(S, amp, CFG.noise_var, order)
    new = code_step_sic(S, amp, D, order)
    for j, k in enumerate(order):
        prefix = D[:, list(order[: j + 1])]
        _, s = mu_search(sym_eig(amp[k] ** 2 * prefix @ prefix.T), D[:, k], p[k], h[k])
        A = amp[k] ** 2 * prefix @ prefix.T
        # null-space fill directions may differ, the attained objective may not
        assert user_objective(new[:, k], A, amp[k], D[:, k]) == pytest.approx(
            user_objective(s, A, amp[k], D[:, k]), rel=1e-9, abs=1e-12
        )
    # the first detected user only sees its own filter
    d0 = D[:, order[0]]
    a0 = amp[order[0]]
    inside = min(1.0, 1.0 / (a0 * np.linalg.norm(d0)))
    assert new[:, order[0]] @ unit(d0) == pytest.approx(inside, abs=1e-10)
