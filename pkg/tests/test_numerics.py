import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdma_games.errors import BracketNotFound, NoSignChange, NotPositiveDefinite, NotSymmetric
from cdma_games.numerics import expand_bracket, find_root_bisect, numerical_rank, spd_solve, sym_eig


def test_sym_eig_diagonal():
    e = sym_eig(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(e.eigenvalues, [3.0, 1.0])
    np.testing.assert_allclose(np.abs(e.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)


def test_sym_eig_two_by_two():
    e = sym_eig([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(e.eigenvalues, [3.0, 1.0])
    v = e.eigenvectors[:, 0]
    assert abs(v[0] - v[1]) < 1e-12


def test_sym_eig_identity_reconstructs():
    e = sym_eig(np.eye(5))
    np.testing.assert_allclose(e.eigenvalues, 1.0)
    np.testing.assert_allclose(e.reconstruct(), np.eye(5), atol=1e-14)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eig([[1.0, 0.1], [0.0, 1.0]])


def test_sym_eig_random_invariants():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        B = rng.standard_normal((7, 7))
        A = B + B.T
        e = sym_eig(A)
        U = e.eigenvectors
        assert np.max(np.abs(U.T @ U - np.eye(7))) <= 1e-9
        assert np.max(np.abs(e.reconstruct() - A)) <= 1e-8 * np.max(np.abs(A))
        assert np.all(np.diff(e.eigenvalues) <= 0)


@pytest.mark.parametrize(
    "A,b,x",
    [
        (np.eye(3), [1.0, -2.0, 3.0], [1.0, -2.0, 3.0]),
        ([[2.0, 1.0], [1.0, 2.0]], [3.0, 3.0], [1.0, 1.0]),
        (np.diag([0.5, 0.5]), [1.0, 0.0], [2.0, 0.0]),
    ],
)
def test_spd_solve_examples(A, b, x):
    np.testing.assert_allclose(spd_solve(A, b), x, atol=1e-14)


def test_spd_solve_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        spd_solve([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 8.0))
def test_spd_solve_residual(seed, log_cond):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    A = (Q * np.logspace(0, log_cond, 7)) @ Q.T
    A = 0.5 * (A + A.T)
    b = rng.standard_normal(7)
    x = spd_solve(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(b))


def test_bisect_sqrt2():
    assert find_root_bisect(lambda x: x * x - 2, 1.0, 2.0, tol=1e-12) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_bisect_odd_function():
    assert find_root_bisect(lambda x: x, -1.0, 1.0) == 0.0


def test_bisect_no_sign_change():
    with pytest.raises(NoSignChange):
        find_root_bisect(lambda x: x * x + 1, 0.0, 1.0)


@pytest.mark.parametrize("shift", [0.1, 0.37, 0.9])
def test_bisect_matches_grid_scan(shift):
    f = lambda x: math.tanh(3 * (x - shift)) + 0.05 * x  # noqa: E731
    root = find_root_bisect(f, 0.0, 1.0, tol=1e-10)
    grid = np.linspace(0.0, 1.0, 200001)
    vals = np.tanh(3 * (grid - shift)) + 0.05 * grid
    i = np.flatnonzero(np.diff(np.sign(vals)))[0]
    assert abs(root - grid[i]) <= 1e-5 + 1e-10


def test_expand_bracket_up():
    lo, hi = expand_bracket(lambda x: x - 10, 0.0, 1.0)
    assert lo <= 10 <= hi


def test_expand_bracket_target_equation():
    lo, hi = expand_bracket(lambda g: math.expm1(g) - 120 * g, 1.0, 2.0)
    assert lo <= 6.689 <= hi


def test_expand_bracket_down():
    lo, hi = expand_bracket(lambda x: x + 50, 0.0, 1.0, direction="down")
    assert lo <= -50 <= hi


def test_expand_bracket_gives_up():
    with pytest.raises(BracketNotFound):
        expand_bracket(lambda x: 1.0, 0.0, 1.0)


def test_numerical_rank():
    assert numerical_rank(np.ones((7, 3))) == 1
    assert numerical_rank(np.eye(7)[:, :4]) == 4
