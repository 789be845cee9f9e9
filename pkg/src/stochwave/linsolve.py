"""Dense SVD, Tikhonov filter-factor solves and regularization parameter choice.

The objective is ``||A x - b||^2 + gamma^2 ||x||^2``; its minimizer is
``sum_i sigma_i / (sigma_i^2 + gamma^2) (u_i . b) v_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SVDFactors",
    "RegularizedCoefficients",
    "Selection",
    "svd",
    "tikhonov_solve",
    "default_gamma_grid",
    "lcurve_points",
    "gcv_values",
    "gcv_select",
    "lcurve_select",
    "select_gamma",
]


@dataclass(frozen=True)
class SVDFactors:
    """Thin SVD ``A = U diag(S) V^T`` with ``S`` non-increasing."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def shape(self):
        return self.U.shape[0], self.V.shape[0]

    def condition(self) -> float:
        if self.S[-1] == 0:
            return np.inf
        return float(self.S[0] / self.S[-1])


@dataclass
class RegularizedCoefficients:
    """Solved expansion weights, split by kernel family."""

    lam: np.ndarray
    zeta: np.ndarray
    gamma: float
    residual_norm: float
    solution_norm: float

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.lam, self.zeta])

    def scaled(self, factor: float) -> "RegularizedCoefficients":
        return RegularizedCoefficients(
            self.lam * factor,
            self.zeta * factor,
            self.gamma,
            self.residual_norm * abs(factor),
            self.solution_norm * abs(factor),
        )


def svd(A: np.ndarray) -> SVDFactors:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("svd expects a matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        U, S, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        norms = np.linalg.norm(A, axis=0)
        raise np.linalg.LinAlgError(
            f"SVD did not converge for a {A.shape} matrix; column norms span "
            f"[{norms.min():.3e}, {norms.max():.3e}]"
        ) from exc
    return SVDFactors(U=U, S=S, V=Vt.T)


def _filter(S: np.ndarray, gamma: float) -> np.ndarray:
    """Tikhonov filter factors ``sigma^2 / (sigma^2 + gamma^2)``."""
    s2 = S * S
    return s2 / (s2 + gamma * gamma)


def tikhonov_solve(factors: SVDFactors, b: np.ndarray, gamma: float) -> np.ndarray:
    """Minimizer of ``||A x - b||^2 + gamma^2 ||x||^2`` via filter factors."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    S = factors.S
    beta = factors.U.T @ np.asarray(b, dtype=float)
    if gamma == 0:
        m, n = factors.shape
        if S.size == 0 or S[-1] <= np.finfo(float).eps * max(m, n) * S[0]:
            raise np.linalg.LinAlgError(
                "unregularized solve of a rank-deficient system (zero singular value)"
            )
        coef = beta / S
    else:
        coef = S * beta / (S * S + gamma * gamma)
    return factors.V @ coef


def default_gamma_grid(S: np.ndarray, size: int = 40) -> np.ndarray:
    """``size`` log-spaced values over ``[sigma_min / 100, sigma_max]``.

    A zero or denormal ``sigma_min`` is floored at ``eps * sigma_max``.
    """
    smax = float(S[0])
    if smax <= 0:
        raise ValueError("matrix is identically zero")
    smin = max(float(S[-1]), np.finfo(float).eps * smax)
    return np.logspace(np.log10(smin * 1e-2), np.log10(smax), size)


def _norms(factors: SVDFactors, b: np.ndarray, grid: np.ndarray):
    """Residual and solution norms for every gamma in ``grid``."""
    b = np.asarray(b, dtype=float)
    S = factors.S
    beta = factors.U.T @ b
    outside = max(float(b @ b - beta @ beta), 0.0)
    res = np.empty(len(grid))
    sol = np.empty(len(grid))
    for i, g in enumerate(grid):
        f = _filter(S, g)
        res[i] = np.sqrt(np.sum(((1.0 - f) * beta) ** 2) + outside)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(S > 0, f * beta / np.where(S > 0, S, 1.0), 0.0)
        sol[i] = np.linalg.norm(coef)
    return res, sol


def lcurve_points(factors: SVDFactors, b: np.ndarray, grid) -> tuple[np.ndarray, np.ndarray]:
    """``(residual_norm, solution_norm)`` along ``grid``."""
    return _norms(factors, b, np.asarray(grid, dtype=float))


def gcv_values(factors: SVDFactors, b: np.ndarray, grid) -> np.ndarray:
    """GCV function ``||r||^2 / (m - sum f_i)^2``; NaN where the trace vanishes."""
    grid = np.asarray(grid, dtype=float)
    m = factors.U.shape[0]
    res, _ = _norms(factors, b, grid)
    out = np.full(len(grid), np.nan)
    for i, g in enumerate(grid):
        denom = m - np.sum(_filter(factors.S, g))
        if denom > 1e-14:
            out[i] = res[i] ** 2 / denom**2
    return out


def gcv_select(factors: SVDFactors, b: np.ndarray, grid) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("GCV grid must be non-empty and positive")
    vals = gcv_values(factors, b, grid)
    if np.all(np.isnan(vals)):
        raise ValueError("GCV denominator vanished at every grid point")
    return float(grid[np.nanargmin(vals)])


def _menger(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Signed three-point curvature at interior points; zero at the ends."""
    k = np.zeros(len(x))
    for i in range(1, len(x) - 1):
        x1, x2, x3 = x[i - 1 : i + 2]
        y1, y2, y3 = y[i - 1 : i + 2]
        a = np.hypot(x2 - x1, y2 - y1)
        b = np.hypot(x3 - x2, y3 - y2)
        c = np.hypot(x3 - x1, y3 - y1)
        cross = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
        denom = a * b * c
        k[i] = 2.0 * cross / denom if denom > 0 else 0.0
    return k


def _unit(v: np.ndarray) -> np.ndarray:
    """Affine map onto [0, 1]; keeps both log axes on a common scale."""
    span = v.max() - v.min()
    return (v - v.min()) / span if span > 0 else np.zeros_like(v)


def _lcurve(factors, b, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.size < 5:
        raise ValueError("L-curve needs at least 5 grid points")
    if np.any(grid <= 0):
        raise ValueError("L-curve grid must be positive")
    res, sol = _norms(factors, b, grid)
    tiny = np.finfo(float).tiny
    k = _menger(_unit(np.log(np.maximum(res, tiny))), _unit(np.log(np.maximum(sol, tiny))))
    if not np.isfinite(k).all() or k.max() <= 1e-8:
        return gcv_select(factors, b, grid), True
    return float(grid[int(np.argmax(k))]), False


def lcurve_select(factors: SVDFactors, b: np.ndarray, grid) -> float:
    """Grid point of maximum curvature of ``(log ||r||, log ||x||)``.

    Both log axes are rescaled to [0, 1] before the three-point curvature is
    taken, so the corner does not depend on the units of ``A`` or ``b``.

    A degenerate (straight) curve falls back to GCV with a ``RuntimeWarning``.
    """
    gamma, fell_back = _lcurve(factors, b, grid)
    if fell_back:
        warnings.warn("L-curve has no corner; using GCV", RuntimeWarning, stacklevel=2)
    return gamma


@dataclass
class Selection:
    gamma: float
    method: str
    fallback: bool = False
    grid: np.ndarray = field(default_factory=lambda: np.empty(0))


def select_gamma(factors: SVDFactors, b: np.ndarray, method: str = "gcv", grid=None, size: int = 40) -> Selection:
    """Choose gamma by ``gcv``, ``lcurve`` or ``fixed:<value>``."""
    if method.startswith("fixed"):
        _, _, value = method.partition(":")
        return Selection(float(value), "fixed")
    if grid is None:
        grid = default_gamma_grid(factors.S, size)
    grid = np.asarray(grid, dtype=float)
    if method == "gcv":
        return Selection(gcv_select(factors, b, grid), "gcv", False, grid)
    if method == "lcurve":
        gamma, fell_back = _lcurve(factors, b, grid)
        return Selection(gamma, "lcurve", fell_back, grid)
    raise ValueError(f"unknown regularization rule {method!r}")
