import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave.linsolve import (
    default_gamma_grid,
    gcv_select,
    gcv_values,
    lcurve_points,
    lcurve_select,
    select_gamma,
    svd,
    tikhonov_solve,
)


def jacobi_eigenvalues(S, tol=1e-14, sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


def check_invariants(A, F):
    r = F.S.size
    np.testing.assert_allclose(F.U.T @ F.U, np.eye(r), atol=1e-10)
    np.testing.assert_allclose(F.V.T @ F.V, np.eye(r), atol=1e-10)
    assert np.linalg.norm(F.U * F.S @ F.V.T - A) <= 1e-10 * max(np.linalg.norm(A), 1e-300)
    assert np.all(np.diff(F.S) <= 0)


class TestSVD:
    def test_identity(self):
        F = svd(np.eye(5))
        np.testing.assert_allclose(F.S, np.ones(5))
        check_invariants(np.eye(5), F)

    def test_diagonal(self):
        A = np.diag([3.0, 2.0, 1.0])
        F = svd(A)
        np.testing.assert_allclose(F.S, [3, 2, 1])
        np.testing.assert_allclose(np.abs(F.U), np.eye(3), atol=1e-14)
        np.testing.assert_allclose(np.abs(F.V), np.eye(3), atol=1e-14)

    def test_jacobi_oracle(self):
        A = np.random.default_rng(3).normal(size=(6, 4))
        F = svd(A)
        np.testing.assert_allclose(F.S**2, jacobi_eigenvalues(A.T @ A), rtol=1e-9)
        check_invariants(A, F)

    @pytest.mark.parametrize("shape", [(8, 3), (3, 8), (20, 20)])
    def test_invariants_random(self, shape):
        A = np.random.default_rng(sum(shape)).normal(size=shape)
        check_invariants(A, svd(A))

    def test_condition(self):
        assert svd(np.diag([4.0, 2.0])).condition() == pytest.approx(2.0)
        assert svd(np.diag([1.0, 0.0])).condition() == np.inf

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            svd(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError):
            svd(np.ones(3))


class TestTikhonov:
    def test_hand_case(self):
        F = svd(np.diag([1.0, 2.0]))
        np.testing.assert_allclose(tikhonov_solve(F, np.array([1.0, 2.0]), 1.0), [0.5, 0.8], atol=1e-12)

    def test_large_gamma(self):
        A = np.random.default_rng(0).normal(size=(7, 4))
        b = np.arange(7.0)
        F = svd(A)
        g = 1e8
        assert np.linalg.norm(tikhonov_solve(F, b, g)) <= np.linalg.norm(b) * F.S[0] / g**2

    def test_exact_solve(self):
        A = np.random.default_rng(1).normal(size=(5, 5)) + 5 * np.eye(5)
        b = np.arange(1.0, 6.0)
        x = tikhonov_solve(svd(A), b, 0.0)
        np.testing.assert_allclose(A @ x, b, atol=1e-9)

    def test_rank_deficient_unregularized(self):
        F = svd(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(np.linalg.LinAlgError):
            tikhonov_solve(F, np.ones(2), 0.0)
        tikhonov_solve(F, np.ones(2), 1e-3)

    def test_negative_gamma(self):
        with pytest.raises(ValueError):
            tikhonov_solve(svd(np.eye(2)), np.ones(2), -1.0)

    @pytest.mark.parametrize("seed", range(50))
    def test_normal_equations(self, seed):
        rng = np.random.default_rng(seed)
        m, n = rng.integers(3, 30, size=2)
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        g = 10 ** rng.uniform(-4, 1)
        x = tikhonov_solve(svd(A), b, g)
        r = (A.T @ A + g * g * np.eye(n)) @ x - A.T @ b
        assert np.linalg.norm(r) <= 1e-8 * np.linalg.norm(A.T @ b)

    def test_row_permutation(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(12, 5))
        b = rng.normal(size=12)
        p = rng.permutation(12)
        x = tikhonov_solve(svd(A), b, 0.1)
        y = tikhonov_solve(svd(A[p]), b[p], 0.1)
        np.testing.assert_allclose(x, y, atol=1e-10)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_monotone_norms(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(10, 6))
        b = rng.normal(size=10)
        grid = np.logspace(-3, 1, 10)
        res, sol = lcurve_points(svd(A), b, grid)
        assert np.all(np.diff(res) >= -1e-12 * res.max())
        assert np.all(np.diff(sol) <= 1e-12 * sol.max())
        for g, r, s in zip(grid, res, sol):
            x = tikhonov_solve(svd(A), b, g)
            assert np.linalg.norm(A @ x - b) == pytest.approx(r, rel=1e-10)
            assert np.linalg.norm(x) == pytest.approx(s, rel=1e-10)


def diagonal_problem(seed=0, noise=0.01, m=10):
    """diag(1..5) padded with zero rows so the residual has a noise floor."""
    A = np.zeros((m, 5))
    A[:5] = np.diag(np.arange(1.0, 6.0))
    x_true = np.ones(5)
    b_exact = A @ x_true
    rng = np.random.default_rng(seed)
    b = b_exact + noise * np.linalg.norm(b_exact) / np.sqrt(m) * rng.normal(size=m)
    return A, x_true, b


class TestGCV:
    def test_single_entry(self):
        A, _, b = diagonal_problem()
        assert gcv_select(svd(A), b, [0.3]) == 0.3

    def test_argmin_contract(self):
        A = np.random.default_rng(2).normal(size=(15, 6))
        b = np.random.default_rng(3).normal(size=15)
        grid = np.logspace(-4, 1, 30)
        F = svd(A)
        g = gcv_select(F, b, grid)
        vals = gcv_values(F, b, grid)
        assert vals[list(grid).index(g)] <= np.nanmin(vals)

    @pytest.mark.parametrize("seed", range(10))
    def test_against_endpoints(self, seed):
        # well-conditioned, so the small-gamma end is near optimal: GCV must
        # beat over-smoothing and stay close to the unregularized error
        A, x_true, b = diagonal_problem(seed)
        F = svd(A)
        grid = np.logspace(-3, 1.5, 30)
        g = gcv_select(F, b, grid)
        err = lambda gam: np.linalg.norm(tikhonov_solve(F, b, gam) - x_true)  # noqa: E731
        assert err(g) < err(grid[-1])
        assert err(g) <= 1.1 * err(grid[0])

    def test_bad_grid(self):
        A, _, b = diagonal_problem()
        with pytest.raises(ValueError):
            gcv_select(svd(A), b, [])
        with pytest.raises(ValueError):
            gcv_select(svd(A), b, [0.0, 1.0])


class TestLCurve:
    @pytest.mark.parametrize("seed", range(5))
    def test_five_point_grid_near_gcv(self, seed):
        A, _, b = diagonal_problem(seed)
        F = svd(A)
        grid = np.logspace(-3, 1.5, 5)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            i_l = list(grid).index(lcurve_select(F, b, grid))
        i_g = list(grid).index(gcv_select(F, b, grid))
        assert abs(i_l - i_g) <= 1

    def test_needs_five_points(self):
        A, _, b = diagonal_problem()
        with pytest.raises(ValueError):
            lcurve_select(svd(A), b, np.logspace(-2, 0, 4))

    def test_collinear_falls_back(self):
        F = svd(np.eye(3))
        b = np.zeros(3)
        grid = np.logspace(-2, 0, 6)
        with pytest.warns(RuntimeWarning, match="GCV"):
            g = lcurve_select(F, b, grid)
        sel = select_gamma(F, b, "lcurve", grid)
        assert sel.fallback and sel.gamma == g


class TestSelect:
    def test_fixed(self):
        sel = select_gamma(svd(np.eye(2)), np.ones(2), "fixed:0.25")
        assert sel.gamma == 0.25 and sel.method == "fixed"

    def test_unknown(self):
        with pytest.raises(ValueError):
            select_gamma(svd(np.eye(2)), np.ones(2), "morozov")

    def test_default_grid(self):
        S = np.array([10.0, 1.0, 0.1])
        grid = default_gamma_grid(S)
        assert len(grid) == 40
        assert grid[0] == pytest.approx(1e-3) and grid[-1] == pytest.approx(10.0)
        floored = default_gamma_grid(np.array([1.0, 0.0]))
        assert floored[0] == pytest.approx(np.finfo(float).eps * 1e-2)

    def test_gcv_default(self):
        A, _, b = diagonal_problem()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            sel = select_gamma(svd(A), b)
        assert sel.method == "gcv" and sel.gamma in sel.grid
