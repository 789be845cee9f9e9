"""Forward solvers for ``dz_t - Laplace(z) dt = f dt + z dW`` with Dirichlet data.

These manufacture the lateral Cauchy data per sample path. They are
deliberately unrelated to the inverse expansion: an explicit leapfrog finite
difference scheme on intervals and the unit square, and implicit time
stepping with symmetric multiquadric collocation on scattered nodes for the
disk and the leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .geometry import (
    BoundarySample,
    Disk,
    Interval,
    LeafCurve,
    SpaceTimeDomain,
    UnitSquare,
    sample_boundary,
    sample_interior,
    trace_grid,
)
from .inverse import CauchySample
from .stochastic import BrownianPath

__all__ = [
    "CFLError",
    "ForwardBlowUp",
    "ForwardProblem",
    "DiscreteField",
    "MeshlessNodes",
    "MeshlessStepper",
    "CauchyExtractor",
    "meshless_nodes",
    "solve_fd",
    "solve_meshless_2d",
    "extract_cauchy",
]


class CFLError(ValueError):
    pass


class ForwardBlowUp(FloatingPointError):
    pass


Fn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ForwardProblem:
    """Coefficients of the forward problem.

    ``z0(x)``, ``z0_dot(x)`` take points of shape ``(k, n)``; ``f(x, t)`` and
    ``h1(x, t)`` additionally take a scalar time.
    """

    domain: SpaceTimeDomain
    z0: Fn
    z0_dot: Fn
    f: Fn
    h1: Fn
    b4_on: bool = True


@dataclass
class DiscreteField:
    """Space-time samples ``values[k, j] = z(points[j], times[k])``."""

    points: np.ndarray
    times: np.ndarray
    values: np.ndarray
    path_id: int = 0
    boundary: Optional[np.ndarray] = None
    grid_shape: Optional[tuple] = None
    spacing: Optional[float] = None

    def __post_init__(self):
        if self.values.shape != (len(self.times), len(self.points)):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.times)} times x {len(self.points)} points"
            )

    @property
    def interior(self) -> np.ndarray:
        if self.boundary is None:
            return np.ones(len(self.points), dtype=bool)
        return ~self.boundary

    def subset(self, point_mask=None, time_index=None) -> "DiscreteField":
        pm = slice(None) if point_mask is None else point_mask
        ti = slice(None) if time_index is None else time_index
        bnd = None if self.boundary is None else self.boundary[pm]
        return DiscreteField(
            points=self.points[pm],
            times=self.times[ti],
            values=self.values[ti][:, pm],
            path_id=self.path_id,
            boundary=bnd,
        )


def _time_steps(T: float, tau: float, path: BrownianPath) -> int:
    M = int(round(T / tau))
    if M < 1 or abs(M * tau - T) > 1e-9 * T:
        raise ValueError(f"tau = {tau} does not divide T = {T}")
    if path.M != M:
        raise ValueError(f"Brownian path has {path.M} steps, solver needs {M}")
    return M


def _check_finite(z: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(z)):
        raise ForwardBlowUp(f"non-finite solution values at time step {step}")


def solve_fd(problem: ForwardProblem, h: float, tau: float, path: BrownianPath) -> DiscreteField:
    """Leapfrog / Euler-Maruyama finite differences on an interval or the unit square.

    Interior update::

        z[k+1] = 2 z[k] - z[k-1] + tau^2 (L_h z[k] + f[k]) + tau z[k] dW[k]

    started by the Taylor step
    ``z[1] = z0 + tau z0_dot + tau^2/2 (L_h z0 + f[0]) + tau/2 z0 dW[0]``.
    Boundary nodes are pinned to ``h1``. The noise terms are dropped when
    ``b4_on`` is false.
    """
    dom = problem.domain
    shape = dom.shape
    if isinstance(shape, Interval):
        J = int(round((shape.b - shape.a) / h))
        axis = shape.a + h * np.arange(J + 1)
        grid = (J + 1,)
        pts = axis.reshape(-1, 1)
    elif isinstance(shape, UnitSquare):
        J = int(round(1.0 / h))
        axis = h * np.arange(J + 1)
        grid = (J + 1, J + 1)
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    else:
        raise ValueError("finite differences need an interval or the unit square")
    n = dom.n
    if tau / h > 1.0 / math.sqrt(n) + 1e-12:
        raise CFLError(f"CFL violated: tau/h = {tau / h:.4g} > 1/sqrt({n})")
    M = _time_steps(dom.T, tau, path)

    bmask = np.zeros(grid, dtype=bool)
    if n == 1:
        bmask[[0, -1]] = True
    else:
        bmask[[0, -1], :] = True
        bmask[:, [0, -1]] = True
    bflat = bmask.ravel()
    bpts = pts[bflat]

    def lap(z):
        out = np.zeros_like(z)
        if n == 1:
            out[1:-1] = (z[2:] - 2.0 * z[1:-1] + z[:-2]) / (h * h)
        else:
            out[1:-1, 1:-1] = (
                z[2:, 1:-1] + z[:-2, 1:-1] + z[1:-1, 2:] + z[1:-1, :-2] - 4.0 * z[1:-1, 1:-1]
            ) / (h * h)
        return out

    def src(t):
        return np.asarray(problem.f(pts, t), dtype=float).reshape(grid)

    def pin(z, t):
        flat = z.reshape(-1)
        flat[bflat] = problem.h1(bpts, t)
        return z

    times = tau * np.arange(M + 1)
    times[-1] = dom.T
    values = np.empty((M + 1, pts.shape[0]))
    dW = path.increments
    noisy = problem.b4_on

    z_prev = np.asarray(problem.z0(pts), dtype=float).reshape(grid).copy()
    pin(z_prev, 0.0)
    v0 = np.asarray(problem.z0_dot(pts), dtype=float).reshape(grid)
    z = z_prev + tau * v0 + 0.5 * tau * tau * (lap(z_prev) + src(0.0))
    if noisy:
        z = z + 0.5 * tau * z_prev * dW[0]
    pin(z, times[1])
    _check_finite(z, 1)
    values[0] = z_prev.ravel()
    values[1] = z.ravel()

    for k in range(1, M):
        z_new = 2.0 * z - z_prev + tau * tau * (lap(z) + src(times[k]))
        if noisy:
            z_new = z_new + tau * z * dW[k]
        pin(z_new, times[k + 1])
        _check_finite(z_new, k + 1)
        values[k + 1] = z_new.ravel()
        z_prev, z = z, z_new

    return DiscreteField(
        points=pts,
        times=times,
        values=values,
        path_id=path.index,
        boundary=bflat,
        grid_shape=grid,
        spacing=h,
    )


@dataclass(frozen=True)
class MeshlessNodes:
    interior: np.ndarray
    boundary: BoundarySample

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.interior, self.boundary.x])

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def spacing(self) -> float:
        """Median nearest-neighbour distance."""
        d, _ = cKDTree(self.points).query(self.points, k=2)
        return float(np.median(d[:, 1]))


def meshless_nodes(domain: SpaceTimeDomain, n_interior: int, n_boundary: int) -> MeshlessNodes:
    return MeshlessNodes(
        interior=sample_interior(domain, n_interior),
        boundary=sample_boundary(domain, n_boundary),
    )


def _mq_radial(d2: np.ndarray, eps: float):
    """2D multiquadric ``sqrt(1 + eps^2 r^2)``, its Laplacian and bi-Laplacian.

    Written in ``s = r^2``: ``Lap g = 4 g' + 4 s g''`` and
    ``Lap^2 g = 32 g'' + 64 s g''' + 16 s^2 g''''``.
    """
    a = eps * eps
    q = 1.0 + a * d2
    g = np.sqrt(q)
    g1 = 0.5 * a / g
    g2 = -0.25 * a * a * q**-1.5
    g3 = 0.375 * a**3 * q**-2.5
    g4 = -0.9375 * a**4 * q**-3.5
    lap = 4.0 * g1 + 4.0 * d2 * g2
    bilap = 32.0 * g2 + 64.0 * d2 * g3 + 16.0 * d2 * d2 * g4
    return g, lap, bilap


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


class MeshlessStepper:
    """Step operator for ``(I - tau^2 Lap) z = rhs`` with Dirichlet rows.

    Symmetric (Hermite) collocation: interior trial functions carry the
    operator, so the system matrix is symmetric and factored once.
    """

    def __init__(self, nodes: MeshlessNodes, tau: float, eps: float = 4.0, max_condition: float = 1e14):
        self.nodes = nodes
        self.tau = float(tau)
        self.eps = float(eps)
        X = nodes.points
        ni = nodes.n_interior
        N = len(X)
        t2 = tau * tau
        g, lap, bilap = _mq_radial(_sqdist(X, X), eps)
        op1 = g - t2 * lap
        A = np.empty((N, N))
        A[:ni, :ni] = g[:ni, :ni] - 2.0 * t2 * lap[:ni, :ni] + t2 * t2 * bilap[:ni, :ni]
        A[:ni, ni:] = op1[:ni, ni:]
        A[ni:, :ni] = op1[ni:, :ni]
        A[ni:, ni:] = g[ni:, ni:]
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > max_condition:
            raise np.linalg.LinAlgError(
                f"meshless collocation matrix is near singular (cond ~ {cond:.2e}); "
                f"increase the shape parameter eps (now {eps}) or coarsen the nodes"
            )
        self.condition = float(cond)
        lu = sla.lu_factor(A)
        # values at the nodes from the collocation coefficients
        E = np.empty((N, N))
        E[:, :ni] = op1[:, :ni]
        E[:, ni:] = g[:, ni:]
        self.step = sla.lu_solve(lu, E.T, trans=1).T
        # Laplacian at the nodes of the plain interpolant of nodal values
        glu = sla.lu_factor(g)
        self.laplacian = sla.lu_solve(glu, lap.T, trans=1).T

    @property
    def n_interior(self) -> int:
        return self.nodes.n_interior


def solve_meshless_2d(
    problem: ForwardProblem,
    nodes: MeshlessNodes,
    tau: float,
    path: BrownianPath,
    eps: float = 4.0,
    stepper: Optional[MeshlessStepper] = None,
) -> DiscreteField:
    """Implicit stepping on scattered nodes for the disk or the leaf.

    ``(z[k+1] - 2 z[k] + z[k-1]) / tau^2 = Lap z[k+1] + f[k] + z[k] dW[k] / tau``
    with each step a modified Helmholtz problem solved by collocation.
    """
    dom = problem.domain
    if not isinstance(dom.shape, (Disk, LeafCurve)):
        raise ValueError("the meshless solver handles the disk and the leaf")
    if stepper is None:
        stepper = MeshlessStepper(nodes, tau, eps)
    elif stepper.nodes is not nodes or abs(stepper.tau - tau) > 0:
        raise ValueError("stepper was built for different nodes or tau")
    M = _time_steps(dom.T, tau, path)
    X = nodes.points
    ni = nodes.n_interior
    bx = nodes.boundary.x
    t2 = tau * tau
    dW = path.increments
    noisy = problem.b4_on

    times = tau * np.arange(M + 1)
    times[-1] = dom.T
    values = np.empty((M + 1, len(X)))

    z_prev = np.asarray(problem.z0(X), dtype=float).copy()
    z_prev[ni:] = problem.h1(bx, 0.0)
    v0 = np.asarray(problem.z0_dot(X), dtype=float)
    z = z_prev + tau * v0 + 0.5 * t2 * (stepper.laplacian @ z_prev + problem.f(X, 0.0))
    if noisy:
        z = z + 0.5 * tau * z_prev * dW[0]
    z[ni:] = problem.h1(bx, times[1])
    _check_finite(z, 1)
    values[0] = z_prev
    values[1] = z

    rhs = np.empty(len(X))
    for k in range(1, M):
        inner = 2.0 * z[:ni] - z_prev[:ni] + t2 * problem.f(X[:ni], times[k])
        if noisy:
            inner = inner + tau * z[:ni] * dW[k]
        rhs[:ni] = inner
        rhs[ni:] = problem.h1(bx, times[k + 1])
        z_new = stepper.step @ rhs
        _check_finite(z_new, k + 1)
        values[k + 1] = z_new
        z_prev, z = z, z_new

    bnd = np.zeros(len(X), dtype=bool)
    bnd[ni:] = True
    return DiscreteField(
        points=X,
        times=times,
        values=values,
        path_id=path.index,
        boundary=bnd,
        spacing=nodes.spacing(),
    )


class CauchyExtractor:
    """Linear maps from nodal field values to boundary traces.

    Builds, once per node set and trace layout, the operators giving ``h1``
    and the outward normal derivative ``h2`` at the trace boundary points.
    ``h2`` uses the one-sided stencil ``(3 z0 - 4 z1 + z2) / (2 d)`` on points
    ``x_b - j d nu`` (``j = 0, 1, 2``).
    """

    def __init__(self, field: DiscreteField, domain: SpaceTimeDomain, n_b: int, eps: float = 4.0):
        self.domain = domain
        self.n_b = n_b
        bnd = sample_boundary(domain, n_b)
        self.bnd = bnd
        if field.grid_shape is not None:
            self._build_grid(field, bnd)
        else:
            self._build_scattered(field, bnd, eps)

    def _build_grid(self, field, bnd):
        grid = field.grid_shape
        if min(grid) < 3:
            raise ValueError("need at least 3 grid nodes along the normal direction")
        h = field.spacing
        K = len(field.points)
        idx = np.arange(K).reshape(grid)
        ops = []
        for xb, nu in zip(bnd.x, bnd.nu):
            rows = np.zeros((3, K))
            if len(grid) == 1:
                lines = [idx[0], idx[1], idx[2]] if nu[0] < 0 else [idx[-1], idx[-2], idx[-3]]
                for j, node in enumerate(lines):
                    rows[j, node] = 1.0
            else:
                ax = 0 if abs(nu[0]) > 0.5 else 1  # normal axis
                inward = [0, 1, 2] if nu[ax] < 0 else [-1, -2, -3]
                tcoord = xb[1 - ax]
                J = grid[0] - 1
                u = tcoord / h
                i0 = min(int(np.floor(u)), J - 1)
                w = u - i0
                for j, line in enumerate(inward):
                    sel = [slice(None), slice(None)]
                    sel[ax] = line
                    nodes_on_line = idx[tuple(sel)]
                    rows[j, nodes_on_line[i0]] += 1.0 - w
                    rows[j, nodes_on_line[i0 + 1]] += w
            ops.append(rows)
        ops = np.array(ops)  # (n_b, 3, K)
        self.h1_op = ops[:, 0, :]
        self.h2_op = (3.0 * ops[:, 0, :] - 4.0 * ops[:, 1, :] + ops[:, 2, :]) / (2.0 * h)

    def _build_scattered(self, field, bnd, eps):
        X = field.points
        d = field.spacing if field.spacing is not None else float(
            np.median(cKDTree(X).query(X, k=2)[0][:, 1])
        )
        inner = np.concatenate([bnd.x - d * bnd.nu, bnd.x - 2.0 * d * bnd.nu])
        if not np.all(self.domain.shape.contains(inner)):
            raise ValueError(
                "fewer than 3 stencil points along the inward normal lie in the domain"
            )
        stencil = np.concatenate([bnd.x, inner])
        a = eps * eps
        G = np.sqrt(1.0 + a * _sqdist(X, X))
        Ge = np.sqrt(1.0 + a * _sqdist(stencil, X))
        lu = sla.lu_factor(G)
        Q = sla.lu_solve(lu, Ge.T, trans=1).T
        nb = len(bnd)
        q0, q1, q2 = Q[:nb], Q[nb : 2 * nb], Q[2 * nb :]
        self.h1_op = q0
        self.h2_op = (3.0 * q0 - 4.0 * q1 + q2) / (2.0 * d)

    def __call__(self, field: DiscreteField, n_t: int) -> CauchySample:
        trace = trace_grid(self.domain, self.n_b, n_t)
        times = trace.times
        idx = np.searchsorted(field.times, times - 1e-12)
        idx = np.clip(idx, 0, len(field.times) - 1)
        if not np.allclose(field.times[idx], times, atol=1e-10):
            raise ValueError("trace times must be a subset of the field's time grid")
        h1_full = field.values @ self.h1_op.T  # (n_times, n_b)
        h2_full = field.values[idx] @ self.h2_op.T
        h1t_full = np.gradient(h1_full, field.times, axis=0, edge_order=2)
        # boundary-major ordering to match TraceGrid
        return CauchySample(
            trace=trace,
            h1=h1_full[idx].T.ravel(),
            h1_t=h1t_full[idx].T.ravel(),
            h2=h2_full.T.ravel(),
            path_id=field.path_id,
            delta=0.0,
        )


def extract_cauchy(
    field: DiscreteField,
    domain: SpaceTimeDomain,
    n_b: int = 2,
    n_t: Optional[int] = None,
    extractor: Optional[CauchyExtractor] = None,
    eps: float = 4.0,
) -> CauchySample:
    """Lateral Cauchy data ``(h1, d_t h1, h2)`` of ``field`` on a trace grid.

    ``n_t`` defaults to every stored time level.
    """
    if n_t is None:
        n_t = len(field.times)
    if extractor is None:
        extractor = CauchyExtractor(field, domain, n_b, eps)
    return extractor(field, n_t)
