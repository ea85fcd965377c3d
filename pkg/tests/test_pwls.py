import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robsparse.exceptions import DegenerateDataError
from robsparse.pwls import (CHANGE_TOL, KKT_TOL, _cd_lasso_nb, _feature_sign_nb,
                            _lars_lasso_nb, kkt_violation, lasso_objective,
                            orthogonalize_intercept, recover_intercept, soft_threshold,
                            solve_weighted_lasso)


def _problem(seed, n, p, weights=True):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = X[:, : min(p, 3)] @ np.array([2.0, -1.0, 0.5][: min(p, 3)]) + rng.standard_normal(n)
    w = rng.uniform(0.0, 1.0, n) if weights else np.ones(n)
    k = np.sqrt(w)
    eta, Xp = orthogonalize_intercept(k, X * k[:, None])
    return Xp, y * k, k, eta


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 3.0]), 1.0),
                                  [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_orthogonalize_examples(rng):
    n = 9
    x = rng.standard_normal(n)
    x -= x.mean()
    eta, Xp = orthogonalize_intercept(np.ones(n), x[:, None])
    assert eta[0] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(Xp[:, 0], x)
    k = rng.uniform(0.1, 1.0, n)
    eta, Xp = orthogonalize_intercept(k, k[:, None])
    assert eta[0] == pytest.approx(1.0)
    np.testing.assert_allclose(Xp[:, 0], 0.0, atol=1e-15)
    k = rng.uniform(0.1, 1.0, 5)
    Xw = rng.standard_normal((5, 3))
    eta, Xp = orthogonalize_intercept(k, Xw)
    np.testing.assert_allclose(k @ Xp, 0.0, atol=1e-12)
    with pytest.raises(DegenerateDataError):
        orthogonalize_intercept(np.zeros(5), Xw)


def test_penalty_zero_is_least_squares():
    Xp, yw, _, _ = _problem(1, 40, 6)
    beta = solve_weighted_lasso(Xp, yw, 0.0)
    ls = np.linalg.lstsq(Xp, yw, rcond=None)[0]
    np.testing.assert_allclose(beta, ls, rtol=1e-8, atol=1e-10)


def test_orthonormal_design_soft_thresholds(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((30, 5)))
    y = rng.standard_normal(30) * 3
    for pen in (0.0, 0.3, 1.0, 2.5):
        beta = solve_weighted_lasso(Q, y, pen)
        np.testing.assert_allclose(beta, soft_threshold(Q.T @ y, pen), atol=1e-8)


def test_large_penalty_gives_zero():
    Xp, yw, _, _ = _problem(2, 25, 4)
    pen = np.max(np.abs(Xp.T @ yw))
    np.testing.assert_array_equal(solve_weighted_lasso(Xp, yw, pen), 0.0)
    np.testing.assert_array_equal(solve_weighted_lasso(Xp, yw, 10 * pen), 0.0)


def test_negative_penalty_rejected():
    Xp, yw, _, _ = _problem(3, 10, 2)
    with pytest.raises(ValueError):
        solve_weighted_lasso(Xp, yw, -1.0)


def test_recover_intercept_examples(rng):
    n = 12
    w = rng.uniform(0.2, 1.0, n)
    k = np.sqrt(w)
    y = rng.standard_normal(n)
    eta = rng.standard_normal(3)
    # zero slopes: the weighted mean of the unweighted response
    a = recover_intercept(k, eta, y * k, np.zeros(3))
    assert a == pytest.approx(np.sum(w * y) / np.sum(w))
    # centred data with unit weights
    X = rng.standard_normal((n, 2))
    X -= X.mean(0)
    yc = X @ np.array([1.0, -2.0])
    eta, Xp = orthogonalize_intercept(np.ones(n), X)
    assert recover_intercept(np.ones(n), eta, yc, np.array([1.0, -2.0])) == pytest.approx(0, abs=1e-10)


def test_intercept_equation_residual():
    Xp, yw, k, eta = _problem(4, 30, 5)
    beta = solve_weighted_lasso(Xp, yw, 1.0)
    a = recover_intercept(k, eta, yw, beta)
    Xw = Xp + np.outer(k, eta)
    # k'(y* - k a - X* beta) = 0 is the unpenalised intercept equation
    assert abs(k @ (yw - k * a - Xw @ beta)) <= 1e-10 * (1 + np.abs(yw).sum())


def _brute_force_min(X, y, pen, radius):
    """Grid search refined around the incumbent; exact for convex objectives."""
    p = X.shape[1]
    centre = np.zeros(p)
    half = radius
    best = lasso_objective(X, y, centre, pen)
    arg = centre
    axis = np.linspace(-1.0, 1.0, 11)
    for _ in range(30):
        for offs in itertools.product(axis, repeat=p):
            b = centre + half * np.array(offs)
            f = lasso_objective(X, y, b, pen)
            if f < best:
                best, arg = f, b
        centre = arg
        half *= 0.35
    return best


@pytest.mark.parametrize("seed", range(8))
def test_brute_force_objective(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(4, 9))
    p = int(rng.integers(1, 4))
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n) * 2
    ls = np.linalg.lstsq(X, y, rcond=None)[0]
    pen = float(rng.uniform(0.0, 1.0) * np.max(np.abs(X.T @ y)))
    beta = solve_weighted_lasso(X, y, pen)
    brute = _brute_force_min(X, y, pen, 2 * max(np.abs(ls).max(), 1e-3))
    assert lasso_objective(X, y, beta, pen) == pytest.approx(brute, abs=1e-3)
    assert lasso_objective(X, y, beta, pen) <= brute + 1e-9


@given(seed=st.integers(0, 10_000), n=st.integers(3, 40), p=st.integers(1, 60),
       frac=st.floats(0.0, 1.2))
def test_kkt_certificate_holds(seed, n, p, frac):
    Xp, yw, _, _ = _problem(seed, n, p)
    pen = frac * float(np.max(np.abs(Xp.T @ yw)))
    if pen == 0.0 and p >= n - 1:
        pen = 1e-3  # the unpenalised problem has no unique solution
    beta = solve_weighted_lasso(Xp, yw, pen)
    assert kkt_violation(Xp, yw, beta, pen) <= KKT_TOL


@given(seed=st.integers(0, 10_000), frac=st.floats(0.01, 0.9))
def test_warm_start_does_not_change_solution(seed, frac):
    Xp, yw, _, _ = _problem(seed, 30, 8)
    pen = frac * float(np.max(np.abs(Xp.T @ yw)))
    cold = solve_weighted_lasso(Xp, yw, pen)
    warm = solve_weighted_lasso(Xp, yw, pen, warm_start=np.ones(8))
    assert lasso_objective(Xp, yw, warm, pen) == pytest.approx(
        lasso_objective(Xp, yw, cold, pen), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n,p", [(30, 8), (20, 60)])
def test_component_solvers_agree(n, p):
    Xp, yw, _, _ = _problem(7, n, p)
    XT = np.ascontiguousarray(Xp.T)
    G, c = XT @ XT.T, XT @ yw
    pen = 0.2 * np.max(np.abs(c))
    b_cd = np.zeros(p)
    _, status = _cd_lasso_nb(XT, yw, pen, b_cd, 10_000, CHANGE_TOL, KKT_TOL)
    assert status == 0
    b_h = np.zeros(p)
    assert _lars_lasso_nb(G, c, pen, b_h, 10_000) == 0
    ref = lasso_objective(Xp, yw, b_cd, pen)
    assert lasso_objective(Xp, yw, b_h, pen) == pytest.approx(ref, rel=1e-9)
    if p < n:
        b_fs = np.zeros(p)
        assert _feature_sign_nb(G, c, pen, b_fs, 1000) == 0
        assert lasso_objective(Xp, yw, b_fs, pen) == pytest.approx(ref, rel=1e-9)


def test_wide_problem_small_penalty():
    # support can grow to the rank of the orthogonalised design
    Xp, yw, _, _ = _problem(11, 25, 200, weights=False)
    for pen in (1e-4, 1e-2, 1.0):
        beta = solve_weighted_lasso(Xp, yw, pen)
        assert kkt_violation(Xp, yw, beta, pen) <= KKT_TOL
        assert np.count_nonzero(beta) <= 24


def test_coordinate_descent_reports_sweep_limit():
    Xp, yw, _, _ = _problem(5, 40, 10)
    XT = np.ascontiguousarray(Xp.T)
    beta = np.zeros(10)
    _, status = _cd_lasso_nb(XT, yw, 1e-3, beta, 1, 0.0, 1e-14)
    assert status == 1


def test_zero_weight_rows_are_harmless():
    Xp, yw, k, eta = _problem(6, 30, 4)
    beta = solve_weighted_lasso(Xp, yw, 0.5)
    keep = k > 0
    k2 = k.copy()
    k2[:5] = 0.0
    X = (Xp + np.outer(k, eta)) / np.where(keep, k, 1)[:, None]
    eta2, Xp2 = orthogonalize_intercept(k2, X * k2[:, None])
    beta2 = solve_weighted_lasso(Xp2, (yw / k) * k2, 0.5)
    assert np.all(np.isfinite(beta2))
    assert beta.shape == beta2.shape
