"""Basis kernels for the space-time expansion.

Two families are used: fundamental solutions of the wave operator
``z_tt - Laplace(z)`` (homogeneous part) and the space-time multiquadric
``sqrt(1 + c^2 (|x|^2 + t^2))`` (particular part). Spatial offsets carry a
trailing axis of length ``n``; for ``n = 1`` a bare array is accepted too.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Interval, SpaceTimeDomain

__all__ = [
    "ConeProximityError",
    "MultiquadricParams",
    "SourceLayout",
    "GREEN_NORMS",
    "green",
    "green_gradient",
    "green_normal_derivative",
    "green_time_derivative",
    "multiquadric",
    "mq_gradient",
    "mq_normal_derivative",
    "mq_time_derivative",
    "mq_wave_operator",
    "place_sources",
    "check_separation",
]

GREEN_NORMS = {
    "sqrt2pi": 1.0 / math.sqrt(2.0 * math.pi),
    "classical": 1.0 / (2.0 * math.pi),
}

CONE_TOL = 1e-10
MIN_SEPARATION = 1e-8


class ConeProximityError(ValueError):
    """Raised when a singular kernel derivative is evaluated on its light cone."""


def _check_dim(n: int) -> None:
    if n not in (1, 2):
        raise ValueError(
            f"no pointwise wave kernel for n = {n}: from n = 3 on the fundamental "
            "solution is a measure on the cone, not a function"
        )


def _as_offsets(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise ValueError(f"spatial offset must have trailing axis {n}, got {x.shape}")
    return x


def _r2(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1)


def green(n: int, x, t, norm: str = "sqrt2pi") -> np.ndarray:
    """Causal fundamental solution of the wave operator.

    ``n = 1``: ``1/2`` inside the forward light cone ``|x| < t``.
    ``n = 2``: ``K / sqrt(t^2 - |x|^2)`` inside the cone, with ``K`` from
    :data:`GREEN_NORMS`. Zero on and outside the cone.
    """
    _check_dim(n)
    x = _as_offsets(x, n)
    t = np.asarray(t, dtype=float)
    r2 = _r2(x)
    q = t * t - r2
    inside = (t > 0) & (q > 0)
    if n == 1:
        return np.where(inside, 0.5, 0.0)
    out = np.zeros(q.shape)
    out[inside] = GREEN_NORMS[norm] / np.sqrt(q[inside])
    return out


def green_gradient(n: int, x, t, norm: str = "sqrt2pi", check: bool = True) -> np.ndarray:
    """Spatial gradient of :func:`green`; trailing axis of length ``n``.

    The one-dimensional kernel is locally constant off the cone, so its
    classical gradient vanishes there. For ``n = 2`` evaluations within
    ``1e-10`` of the cone raise :class:`ConeProximityError` when ``check``.
    """
    _check_dim(n)
    x = _as_offsets(x, n)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    if n == 1:
        return np.zeros(shape + (1,))
    x = np.broadcast_to(x, shape + (n,))
    t = np.broadcast_to(t, shape)
    q = t * t - _r2(x)
    if check:
        near = (t > 0) & (np.abs(q) < CONE_TOL)
        if np.any(near):
            idx = np.argwhere(near)[0]
            raise ConeProximityError(
                f"gradient of the 2D kernel requested on the light cone at index {tuple(idx)}"
            )
    inside = (t > 0) & (q > 0)
    out = np.zeros(shape + (n,))
    k = GREEN_NORMS[norm]
    out[inside] = k * x[inside] * (q[inside] ** -1.5)[:, None]
    return out


def green_time_derivative(n: int, x, t, norm: str = "sqrt2pi", check: bool = True) -> np.ndarray:
    """``d green / dt`` off the cone (zero for ``n = 1``)."""
    _check_dim(n)
    x = _as_offsets(x, n)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    if n == 1:
        return np.zeros(shape)
    t = np.broadcast_to(t, shape)
    q = t * t - _r2(np.broadcast_to(x, shape + (n,)))
    if check and np.any((t > 0) & (np.abs(q) < CONE_TOL)):
        raise ConeProximityError("time derivative of the 2D kernel requested on the light cone")
    inside = (t > 0) & (q > 0)
    out = np.zeros(shape)
    out[inside] = -GREEN_NORMS[norm] * t[inside] * q[inside] ** -1.5
    return out


def green_normal_derivative(n: int, x, nu, t, norm: str = "sqrt2pi") -> np.ndarray:
    """``grad green . nu`` (outward normal derivative at the evaluation point)."""
    g = green_gradient(n, x, t, norm=norm)
    nu = _as_offsets(nu, n)
    return np.sum(g * nu, axis=-1)


@dataclass(frozen=True)
class MultiquadricParams:
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("multiquadric shape parameter must be positive")


def _c(c) -> float:
    return c.c if isinstance(c, MultiquadricParams) else float(c)


def multiquadric(c, x, t) -> np.ndarray:
    """``sqrt(1 + c^2 (|x|^2 + t^2))``; ``x`` must carry the spatial axis."""
    c = _c(c)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.sqrt(1.0 + c * c * (_r2(x) + t * t))


def mq_gradient(c, x, t):
    """Return ``(grad_x psi, d psi / dt)``."""
    c = _c(c)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    psi = multiquadric(c, x, t)
    return c * c * x / psi[..., None], c * c * t / psi


def mq_normal_derivative(c, x, nu, t) -> np.ndarray:
    gx, _ = mq_gradient(c, x, t)
    return np.sum(gx * np.asarray(nu, dtype=float), axis=-1)


def mq_time_derivative(c, x, t) -> np.ndarray:
    return mq_gradient(c, x, t)[1]


def mq_wave_operator(c, n: int, x, t) -> np.ndarray:
    """Closed form of ``psi_tt - Laplace(psi)`` in ``n`` space dimensions.

    Equals ``(1 - n) c^2 / psi - c^4 (t^2 - |x|^2) / psi^3``.
    """
    _check_dim(n)
    c = _c(c)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    r2 = _r2(x)
    psi = np.sqrt(1.0 + c * c * (r2 + t * t))
    return (1 - n) * c * c / psi - c**4 * (t * t - r2) / psi**3


@dataclass(frozen=True)
class SourceLayout:
    """Space-time source points ``(xi_1..xi_n, eta)`` of one kernel family."""

    points: np.ndarray
    family: str
    R: float
    n: int

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def xi(self) -> np.ndarray:
        return self.points[:, : self.n]

    @property
    def eta(self) -> np.ndarray:
        return self.points[:, self.n]

    def shifted(self, x0) -> "SourceLayout":
        shift = np.zeros(self.n + 1)
        shift[: self.n] = x0
        return SourceLayout(self.points + shift, self.family, self.R, self.n)

    def to_csv(self, path) -> None:
        names = [f"x{i + 1}" for i in range(self.n)] + ["t"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["family", *names])
            for row in self.points:
                w.writerow([self.family, *(repr(float(v)) for v in row)])


def _integer_root(N: int, k: int) -> int:
    m = int(round(N ** (1.0 / k)))
    if m**k != N:
        raise ValueError(f"multiquadric grid needs N = m^{k}, got N = {N}")
    return m


def place_sources(
    domain: SpaceTimeDomain,
    R: float,
    N: int,
    family: str,
    *,
    time_extent: float | None = None,
    n_time: int = 8,
    pad: float = 0.5,
    collocation: np.ndarray | None = None,
) -> SourceLayout:
    """Source points of one family.

    ``green`` in 1D: ``N/2`` points on each of the lines ``x = a + t + R`` and
    ``x = a + t - R`` (``a`` the left end of the interval), times equispaced in
    ``[-time_extent, T + time_extent]`` with ``time_extent = R/2`` by default.

    ``green`` in 2D: ``n_time`` cell-centred times in ``[-R, T]`` times
    ``N / n_time`` angles on the circle enclosing ``G``, inflated by ``R``.

    ``mq``: a tensor grid with ``m = N^(1/(n+1))`` points per axis over the
    bounding box of ``Q`` padded by ``pad`` in space and time.

    When ``collocation`` (rows ``(x, t)``) is given, any source closer than
    ``1e-8`` to a collocation point raises ``ValueError``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    n, T = domain.n, domain.T

    if family == "green":
        if n == 1:
            if N % 2:
                raise ValueError("1D Green layout needs an even N (two lines)")
            ext = 0.5 * R if time_extent is None else float(time_extent)
            a = domain.shape.a if isinstance(domain.shape, Interval) else 0.0
            eta = np.linspace(-ext, T + ext, N // 2)
            pts = np.concatenate(
                [np.stack([a + eta + R, eta], 1), np.stack([a + eta - R, eta], 1)]
            )
        else:
            if N % n_time:
                raise ValueError(f"2D Green layout needs N divisible by n_time={n_time}")
            n_ang = N // n_time
            center, radius = domain.shape.enclosing_circle()
            rho = radius + R
            ang = 2.0 * math.pi * np.arange(n_ang) / n_ang
            # cell midpoints: the endpoint -R would put the nearest source
            # exactly on the cone of the boundary point at t = 0
            eta = -R + (np.arange(n_time) + 0.5) * (T + R) / n_time
            A, E = np.meshgrid(ang, eta, indexing="ij")
            pts = np.stack(
                [center[0] + rho * np.cos(A.ravel()), center[1] + rho * np.sin(A.ravel()), E.ravel()],
                axis=1,
            )
    elif family == "mq":
        m = _integer_root(N, n + 1)
        lo, hi = domain.shape.bounding_box()
        axes = [np.linspace(lo[i] - pad, hi[i] + pad, m) for i in range(n)]
        axes.append(np.linspace(-pad, T + pad, m))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
    else:
        raise ValueError(f"unknown source family {family!r}")

    layout = SourceLayout(points=pts, family=family, R=float(R), n=n)
    if collocation is not None:
        check_separation(layout, collocation)
    return layout


def check_separation(layout: SourceLayout, collocation: np.ndarray) -> float:
    """Minimum source/collocation distance; raises if below ``1e-8``."""
    colloc = np.asarray(collocation, dtype=float)
    dist, idx = cKDTree(colloc).query(layout.points)
    j = int(np.argmin(dist))
    if dist[j] <= MIN_SEPARATION:
        raise ValueError(
            f"{layout.family} source {j} at {layout.points[j]} coincides with "
            f"collocation point {colloc[idx[j]]}"
        )
    return float(dist[j])
