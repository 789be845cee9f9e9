"""Spatial domains, collocation point layouts and lateral boundary grids.

All layouts are deterministic tensor or polar grids so that the collocation
matrices built on top of them are reproducible from run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Interval",
    "Disk",
    "LeafCurve",
    "UnitSquare",
    "SpaceTimeDomain",
    "BoundarySample",
    "TraceGrid",
    "sample_interior",
    "sample_boundary",
    "trace_grid",
    "leaf_point",
    "leaf_normal",
    "domain_from_config",
]


@dataclass(frozen=True)
class Interval:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Interval requires a < b, got ({self.a}, {self.b})")

    @property
    def dim(self) -> int:
        return 1

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return (x > self.a) & (x < self.b)

    def area(self) -> float:
        return self.b - self.a

    def bounding_box(self):
        return np.array([self.a]), np.array([self.b])

    def enclosing_circle(self):
        return np.array([0.5 * (self.a + self.b)]), 0.5 * (self.b - self.a)


@dataclass(frozen=True)
class Disk:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"Disk requires radius > 0, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return 2

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x - np.asarray(self.center)
        return np.einsum("ij,ij->i", d, d) < self.radius**2

    def area(self) -> float:
        return math.pi * self.radius**2

    def bounding_box(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def enclosing_circle(self):
        return np.asarray(self.center), self.radius


@dataclass(frozen=True)
class LeafCurve:
    """Petal bounded by ``r = sin(2 theta)``, ``0 < theta < pi/2``."""

    @property
    def dim(self) -> int:
        return 2

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.hypot(x[:, 0], x[:, 1])
        theta = np.arctan2(x[:, 1], x[:, 0])
        inside_sector = (theta > 0) & (theta < 0.5 * math.pi)
        return inside_sector & (r < np.sin(2.0 * theta)) & (r > 0)

    def area(self) -> float:
        # integral of sin(2 theta)^2 / 2 over (0, pi/2)
        return math.pi / 8.0

    def bounding_box(self):
        # max of x = sin(2t) cos(t) is attained at cos^2 t = 2/3
        t = math.acos(math.sqrt(2.0 / 3.0))
        xmax = math.sin(2 * t) * math.cos(t)
        return np.zeros(2), np.array([xmax, xmax])

    def enclosing_circle(self):
        lo, hi = self.bounding_box()
        center = 0.5 * (lo + hi)
        theta = np.linspace(0.0, 0.5 * math.pi, 2001)
        pts = leaf_point(theta)
        radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
        return center, radius


@dataclass(frozen=True)
class UnitSquare:
    @property
    def dim(self) -> int:
        return 2

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x > 0.0) & (x < 1.0), axis=1)

    def area(self) -> float:
        return 1.0

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    def enclosing_circle(self):
        return np.array([0.5, 0.5]), math.sqrt(0.5)


Shape = Union[Interval, Disk, LeafCurve, UnitSquare]


@dataclass(frozen=True)
class SpaceTimeDomain:
    """The cylinder ``(0, T) x G``."""

    shape: Shape = field(default_factory=Interval)
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"time horizon must be positive, got {self.T}")
        if not isinstance(self.shape, (Interval, Disk, LeafCurve, UnitSquare)):
            raise TypeError(f"unsupported shape {self.shape!r}")

    @property
    def n(self) -> int:
        return self.shape.dim


@dataclass(frozen=True)
class BoundarySample:
    """Boundary points with outward unit normals, stored as arrays.

    ``x`` and ``nu`` have shape ``(k, n)``; ``param`` holds the boundary
    parameter of each point in ``[0, 1)``.
    """

    x: np.ndarray
    nu: np.ndarray
    param: np.ndarray

    def __len__(self) -> int:
        return len(self.param)


@dataclass(frozen=True)
class TraceGrid:
    """Space-time points on the lateral boundary, boundary-point major.

    Row ``i * n_t + k`` holds boundary point ``i`` at time level ``k``.
    """

    x: np.ndarray
    nu: np.ndarray
    t: np.ndarray
    n_b: int
    n_t: int

    def __len__(self) -> int:
        return len(self.t)

    @property
    def times(self) -> np.ndarray:
        return self.t[: self.n_t]


def leaf_point(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    r = np.sin(2.0 * theta)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def leaf_normal(theta) -> np.ndarray:
    """Outward unit normal of the leaf boundary at polar angle ``theta``.

    Undefined at the cusp ``theta in {0, pi/2}``.
    """
    theta = np.asarray(theta, dtype=float)
    s2, c2 = np.sin(2.0 * theta), np.cos(2.0 * theta)
    dx = 2.0 * c2 * np.cos(theta) - s2 * np.sin(theta)
    dy = 2.0 * c2 * np.sin(theta) + s2 * np.cos(theta)
    # counterclockwise traversal: rotate the tangent by -90 degrees
    nrm = np.hypot(dx, dy)
    return np.stack([dy / nrm, -dx / nrm], axis=-1)


def _disk_rings(shape: Disk, m: int) -> np.ndarray:
    pts = [np.zeros((1, 2))]
    for i in range(1, m + 1):
        rho = i / (m + 1)
        k = max(3, int(round(2.0 * math.pi * i)))
        phase = 0.5 * (i % 2) * 2.0 * math.pi / k
        ang = phase + 2.0 * math.pi * np.arange(k) / k
        pts.append(rho * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    out = np.vstack(pts) * shape.radius + np.asarray(shape.center)
    return out


def _leaf_polar(m: int) -> np.ndarray:
    pts = []
    spacing = 1.0 / (m + 1)
    for i in range(1, m + 1):
        rho = i * spacing
        k = max(2, int(round(0.5 * math.pi * i)))
        ang = 0.5 * math.pi * (np.arange(k) + 0.5) / k
        keep = rho < np.sin(2.0 * ang) - 0.5 * spacing
        if np.any(keep):
            a = ang[keep]
            pts.append(rho * np.stack([np.cos(a), np.sin(a)], axis=1))
    if not pts:
        return np.zeros((0, 2))
    return np.vstack(pts)


def _square_grid(m: int) -> np.ndarray:
    g = np.arange(1, m + 1) / (m + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def sample_interior(domain: SpaceTimeDomain, n_points: int) -> np.ndarray:
    """Quasi-uniform points strictly inside the spatial domain.

    Intervals return exactly ``n_points`` equispaced points. Two-dimensional
    rules (tensor grid for the square, polar grids for the disk and leaf) are
    refined until they hold at least ``n_points`` points, so the count can
    overshoot slightly. The result always has shape ``(k, n)``.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    shape = domain.shape
    if isinstance(shape, Interval):
        k = np.arange(1, n_points + 1) / (n_points + 1)
        return (shape.a + (shape.b - shape.a) * k).reshape(-1, 1)

    if isinstance(shape, UnitSquare):
        builder = _square_grid
    elif isinstance(shape, Disk):
        builder = lambda m: _disk_rings(shape, m)  # noqa: E731
    elif isinstance(shape, LeafCurve):
        builder = _leaf_polar
    else:  # pragma: no cover - guarded by SpaceTimeDomain
        raise TypeError(f"unsupported shape {shape!r}")

    m = 1
    pts = builder(m)
    while len(pts) < n_points:
        m += 1
        pts = builder(m)
    return pts


def sample_boundary(domain: SpaceTimeDomain, n_points: int) -> BoundarySample:
    """Equispaced boundary points (in the boundary parameter) with normals."""
    shape = domain.shape
    if isinstance(shape, Interval):
        if n_points != 2:
            raise ValueError("an interval boundary consists of exactly 2 points")
        return BoundarySample(
            x=np.array([[shape.a], [shape.b]]),
            nu=np.array([[-1.0], [1.0]]),
            param=np.array([0.0, 0.5]),
        )
    if n_points < 2:
        raise ValueError("need at least 2 boundary points in two dimensions")

    if isinstance(shape, Disk):
        s = np.arange(n_points) / n_points
        ang = 2.0 * math.pi * s
        nu = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        x = np.asarray(shape.center) + shape.radius * nu
        return BoundarySample(x=x, nu=nu, param=s)

    if isinstance(shape, LeafCurve):
        # half-offset parameters keep the cusp at the origin out of the sample
        s = (np.arange(n_points) + 0.5) / n_points
        theta = 0.5 * math.pi * s
        return BoundarySample(x=leaf_point(theta), nu=leaf_normal(theta), param=s)

    if isinstance(shape, UnitSquare):
        if n_points % 4:
            raise ValueError(
                "unit-square boundary needs a multiple of 4 points to avoid corners"
            )
        s = (np.arange(n_points) + 0.5) / n_points
        side = np.floor(4.0 * s).astype(int)
        u = 4.0 * s - side
        starts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        normals = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        x = starts[side] + u[:, None] * dirs[side]
        return BoundarySample(x=x, nu=normals[side].copy(), param=s)

    raise TypeError(f"unsupported shape {shape!r}")  # pragma: no cover


def trace_grid(domain: SpaceTimeDomain, n_b: int, n_t: int) -> TraceGrid:
    """Cartesian product of boundary samples with ``n_t`` uniform time levels."""
    if n_t < 2:
        raise ValueError("n_t must be >= 2")
    bnd = sample_boundary(domain, n_b)
    times = domain.T * np.arange(n_t) / (n_t - 1)
    k = len(bnd)
    return TraceGrid(
        x=np.repeat(bnd.x, n_t, axis=0),
        nu=np.repeat(bnd.nu, n_t, axis=0),
        t=np.tile(times, k),
        n_b=k,
        n_t=n_t,
    )


def domain_from_config(cfg: dict) -> SpaceTimeDomain:
    """Build a domain from ``{"shape": ..., **params}``.

    Recognised shapes: ``interval`` (a, b), ``disk`` (center, radius),
    ``leaf`` and ``square``; ``T`` defaults to 1.
    """
    kind = cfg.get("shape", "interval")
    T = float(cfg.get("T", 1.0))
    if kind == "interval":
        shape = Interval(float(cfg.get("a", 0.0)), float(cfg.get("b", 1.0)))
    elif kind == "disk":
        shape = Disk(tuple(cfg.get("center", (0.0, 0.0))), float(cfg.get("radius", 1.0)))
    elif kind == "leaf":
        shape = LeafCurve()
    elif kind == "square":
        shape = UnitSquare()
    else:
        raise ValueError(f"unknown shape {kind!r}")
    return SpaceTimeDomain(shape, T)
