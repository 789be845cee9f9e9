"""Collocation system for lateral Cauchy data and its regularized solution.

The field is expanded as

    z(x, t) ~ sum_j lam_j G(x - xi_j, t - eta_j) + sum_j zeta_j psi(x - xi'_j, t - eta'_j)

with ``G`` the causal wave kernel and ``psi`` the space-time multiquadric.
Interior rows impose ``psi_tt - Lap psi = f`` on the multiquadric part (the
wave kernel is annihilated by the operator away from its source), boundary
rows impose the Dirichlet trace ``h1`` and the Neumann trace ``h2``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels as K
from .geometry import SpaceTimeDomain, TraceGrid, sample_interior
from .linsolve import (
    RegularizedCoefficients,
    SVDFactors,
    default_gamma_grid,
    gcv_values,
    lcurve_points,
    select_gamma,
    svd,
    tikhonov_solve,
)

__all__ = [
    "CauchySample",
    "CollocationSystem",
    "InverseConfig",
    "InverseSolver",
    "InverseSolution",
    "PipelineError",
    "assemble",
    "basis_matrix",
    "reconstruct",
    "solve_inverse",
]


class PipelineError(RuntimeError):
    """A failure inside :func:`solve_inverse`, tagged with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"inverse pipeline failed at stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class CauchySample:
    """Lateral traces on a :class:`TraceGrid`, one value per trace point."""

    trace: TraceGrid
    h1: np.ndarray
    h1_t: np.ndarray
    h2: np.ndarray
    path_id: int = 0
    delta: float = 0.0

    def __post_init__(self):
        k = len(self.trace)
        for name in ("h1", "h1_t", "h2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (k,):
                raise ValueError(f"{name} has shape {v.shape}, trace has {k} points")
            setattr(self, name, v)


@dataclass
class CollocationSystem:
    A: np.ndarray
    b: np.ndarray
    blocks: dict
    green_layout: K.SourceLayout
    mq_layout: K.SourceLayout
    interior_pts: np.ndarray
    trace: TraceGrid

    @property
    def n_green(self) -> int:
        return self.green_layout.N

    def block_scales(self) -> dict:
        """RMS row norm of each block (1 for an all-zero block)."""
        out = {}
        for name, sl in self.blocks.items():
            rows = self.A[sl]
            s = float(np.sqrt(np.mean(np.sum(rows * rows, axis=1)))) if rows.size else 1.0
            out[name] = s if s > 0 else 1.0
        return out


@dataclass
class InverseConfig:
    """Discretization and regularization choices of the inverse solve."""

    c: float = 0.6
    R: float = 1.5
    n_green: int = 40
    n_mq: int = 225
    mq_pad: float = 0.5
    green_time_extent: Optional[float] = None
    green_n_time: int = 8
    n_interior: int = 20
    n_interior_t: int = 20
    reg: str = "gcv"
    grid_size: int = 40
    use_h1_t: bool = False
    green_norm: str = "sqrt2pi"
    scale_rows: bool = True


def _offsets(points: np.ndarray, times: np.ndarray, layout: K.SourceLayout):
    dx = points[:, None, :] - layout.xi[None, :, :]
    dt = times[:, None] - layout.eta[None, :]
    return dx, dt


def basis_matrix(
    kind: str,
    points: np.ndarray,
    times: np.ndarray,
    green_layout: K.SourceLayout,
    mq_layout: K.SourceLayout,
    c: float,
    n: int,
    nu: Optional[np.ndarray] = None,
    norm: str = "sqrt2pi",
) -> np.ndarray:
    """Rows of kernel evaluations at space-time points.

    ``kind`` is ``value``, ``normal`` (needs ``nu``), ``time`` or ``wave``
    (the wave operator, which vanishes on the Green columns).
    """
    points = np.asarray(points, dtype=float).reshape(len(times), n)
    times = np.asarray(times, dtype=float)
    gx, gt = _offsets(points, times, green_layout)
    mx, mt = _offsets(points, times, mq_layout)
    if kind == "value":
        G = K.green(n, gx, gt, norm=norm)
        P = K.multiquadric(c, mx, mt)
    elif kind == "normal":
        nu_b = nu[:, None, :]
        G = K.green_normal_derivative(n, gx, nu_b, gt, norm=norm)
        P = K.mq_normal_derivative(c, mx, nu_b, mt)
    elif kind == "time":
        G = K.green_time_derivative(n, gx, gt, norm=norm)
        P = K.mq_time_derivative(c, mx, mt)
    elif kind == "wave":
        G = np.zeros((len(times), green_layout.N))
        P = K.mq_wave_operator(c, n, mx, mt)
    else:
        raise ValueError(f"unknown row kind {kind!r}")
    return np.hstack([G, P])


def _check_finite(A: np.ndarray, block: str, pts: np.ndarray, system_layouts) -> None:
    bad = ~np.isfinite(A)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        g, m = system_layouts
        src = g.points[j] if j < g.N else m.points[j - g.N]
        raise ValueError(
            f"non-finite kernel value in {block} row {i} at collocation point "
            f"{pts[i]} for source {j} at {src}"
        )


def _matrix_blocks(domain, trace, interior_pts, green_layout, mq_layout, c, use_h1_t, norm):
    n = domain.n
    layouts = (green_layout, mq_layout)
    blocks = []
    ipts = np.asarray(interior_pts, dtype=float)
    pde = basis_matrix("wave", ipts[:, :n], ipts[:, n], *layouts, c, n, norm=norm)
    _check_finite(pde, "pde", ipts, layouts)
    blocks.append(("pde", pde))
    tpts = np.column_stack([trace.x, trace.t])
    dir_ = basis_matrix("value", trace.x, trace.t, *layouts, c, n, norm=norm)
    _check_finite(dir_, "dirichlet", tpts, layouts)
    blocks.append(("dirichlet", dir_))
    try:
        neu = basis_matrix("normal", trace.x, trace.t, *layouts, c, n, nu=trace.nu, norm=norm)
    except K.ConeProximityError as exc:
        raise ValueError(f"neumann rows: {exc}") from exc
    _check_finite(neu, "neumann", tpts, layouts)
    blocks.append(("neumann", neu))
    if use_h1_t:
        tim = basis_matrix("time", trace.x, trace.t, *layouts, c, n, norm=norm)
        _check_finite(tim, "dirichlet_t", tpts, layouts)
        blocks.append(("dirichlet_t", tim))
    return blocks


def _rhs(cauchy: CauchySample, f: Callable, interior_pts: np.ndarray, n: int, use_h1_t: bool):
    ipts = np.asarray(interior_pts, dtype=float)
    parts = [
        np.broadcast_to(np.asarray(f(ipts[:, :n], ipts[:, n]), dtype=float), (len(ipts),)),
        cauchy.h1,
        cauchy.h2,
    ]
    if use_h1_t:
        parts.append(cauchy.h1_t)
    return np.concatenate(parts)


def _stack(blocks):
    A = np.vstack([blk for _, blk in blocks])
    sl = {}
    start = 0
    for name, blk in blocks:
        sl[name] = slice(start, start + len(blk))
        start += len(blk)
    return A, sl


def assemble(
    domain: SpaceTimeDomain,
    cauchy: CauchySample,
    f: Callable,
    green_layout: K.SourceLayout,
    mq_layout: K.SourceLayout,
    c: float,
    interior_pts: np.ndarray,
    use_h1_t: bool = False,
    norm: str = "sqrt2pi",
) -> CollocationSystem:
    """Stack PDE, Dirichlet and Neumann rows (in that order).

    ``interior_pts`` holds space-time rows ``(x_1..x_n, t)``; ``f(x, t)`` is
    called with arrays of shape ``(k, n)`` and ``(k,)``.
    """
    blocks = _matrix_blocks(domain, cauchy.trace, interior_pts, green_layout, mq_layout, c, use_h1_t, norm)
    A, sl = _stack(blocks)
    if np.any(A[sl["pde"], : green_layout.N] != 0):
        raise AssertionError("PDE rows must vanish on the Green columns")
    b = _rhs(cauchy, f, interior_pts, domain.n, use_h1_t)
    return CollocationSystem(
        A=A,
        b=b,
        blocks=sl,
        green_layout=green_layout,
        mq_layout=mq_layout,
        interior_pts=np.asarray(interior_pts, dtype=float),
        trace=cauchy.trace,
    )


def reconstruct(
    coeffs,
    green_layout: K.SourceLayout,
    mq_layout: K.SourceLayout,
    c: float,
    points: np.ndarray,
    times: np.ndarray,
    path_id: int = 0,
    norm: str = "sqrt2pi",
    chunk: int = 4096,
):
    """Evaluate the expansion on ``points x times``; returns a ``DiscreteField``."""
    from .forward import DiscreteField

    vec = coeffs.vector if isinstance(coeffs, RegularizedCoefficients) else np.asarray(coeffs, dtype=float)
    n = green_layout.n
    points = np.asarray(points, dtype=float).reshape(-1, n)
    times = np.asarray(times, dtype=float)
    P = np.repeat(points[None, :, :], len(times), axis=0).reshape(-1, n)
    T = np.repeat(times, len(points))
    vals = np.empty(len(T))
    for s in range(0, len(T), chunk):
        e = min(s + chunk, len(T))
        vals[s:e] = basis_matrix("value", P[s:e], T[s:e], green_layout, mq_layout, c, n, norm=norm) @ vec
    return DiscreteField(points=points, times=times, values=vals.reshape(len(times), len(points)), path_id=path_id)


def interior_collocation(domain: SpaceTimeDomain, n_space: int, n_time: int) -> np.ndarray:
    """Interior spatial points crossed with ``n_time`` uniform levels on ``[0, T]``."""
    xs = sample_interior(domain, n_space)
    ts = np.linspace(0.0, domain.T, n_time)
    X = np.repeat(xs, len(ts), axis=0)
    Tt = np.tile(ts, len(xs))
    return np.column_stack([X, Tt])


@dataclass
class InverseSolution:
    coeffs: RegularizedCoefficients
    field: object
    report: dict = field(default_factory=dict)


class InverseSolver:
    """Pipeline with the data-independent work done once.

    The matrix depends only on the domain, trace layout and configuration,
    so it is assembled, row-scaled and factored here; :meth:`solve` then only
    builds the right-hand side for each data set.
    """

    def __init__(self, domain: SpaceTimeDomain, trace: TraceGrid, config: InverseConfig):
        self.domain = domain
        self.trace = trace
        self.config = cfg = config
        self.timings = {}
        n = domain.n
        stage = "place_sources"
        try:
            t0 = time.perf_counter()
            self.interior_pts = interior_collocation(domain, cfg.n_interior, cfg.n_interior_t)
            colloc = np.vstack([self.interior_pts, np.column_stack([trace.x, trace.t])])
            self.green_layout = K.place_sources(
                domain, cfg.R, cfg.n_green, "green",
                time_extent=cfg.green_time_extent, n_time=cfg.green_n_time, collocation=colloc,
            )
            self.mq_layout = K.place_sources(
                domain, cfg.R, cfg.n_mq, "mq", pad=cfg.mq_pad, collocation=colloc
            )
            self.timings[stage] = time.perf_counter() - t0

            stage = "assemble"
            t0 = time.perf_counter()
            blocks = _matrix_blocks(
                domain, trace, self.interior_pts, self.green_layout, self.mq_layout,
                cfg.c, cfg.use_h1_t, cfg.green_norm,
            )
            self.A, self.blocks = _stack(blocks)
            if np.any(self.A[self.blocks["pde"], : self.green_layout.N] != 0):
                raise AssertionError("PDE rows must vanish on the Green columns")
            self.row_scale = np.ones(len(self.A))
            if cfg.scale_rows:
                sys_ = CollocationSystem(self.A, np.zeros(len(self.A)), self.blocks, self.green_layout,
                                         self.mq_layout, self.interior_pts, trace)
                for name, s in sys_.block_scales().items():
                    self.row_scale[self.blocks[name]] = 1.0 / s
            self.As = self.A * self.row_scale[:, None]
            self.timings[stage] = time.perf_counter() - t0

            stage = "svd"
            t0 = time.perf_counter()
            self.factors: SVDFactors = svd(self.As)
            self.timings[stage] = time.perf_counter() - t0
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage, exc) from exc
        self._eval_cache = None

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    def system(self, cauchy: CauchySample, f: Callable) -> CollocationSystem:
        b = _rhs(cauchy, f, self.interior_pts, self.domain.n, self.config.use_h1_t)
        return CollocationSystem(self.A, b, self.blocks, self.green_layout, self.mq_layout,
                                 self.interior_pts, self.trace)

    def solve(self, cauchy: CauchySample, f: Callable) -> tuple[RegularizedCoefficients, dict]:
        cfg = self.config
        stage = "assemble"
        try:
            b = _rhs(cauchy, f, self.interior_pts, self.domain.n, cfg.use_h1_t)
            bs = b * self.row_scale
            stage = "select"
            t0 = time.perf_counter()
            sel = select_gamma(self.factors, bs, cfg.reg, size=cfg.grid_size)
            t_sel = time.perf_counter() - t0
            stage = "tikhonov_solve"
            vec = tikhonov_solve(self.factors, bs, sel.gamma)
        except Exception as exc:
            raise PipelineError(stage, exc) from exc
        ng = self.green_layout.N
        resid = self.As @ vec - bs
        coeffs = RegularizedCoefficients(
            lam=vec[:ng].copy(),
            zeta=vec[ng:].copy(),
            gamma=float(sel.gamma),
            residual_norm=float(np.linalg.norm(resid)),
            solution_norm=float(np.linalg.norm(vec)),
        )
        raw = self.A @ vec - b
        report = {
            "gamma": coeffs.gamma,
            "reg": sel.method,
            "lcurve_fallback": bool(sel.fallback),
            "residual_norm": coeffs.residual_norm,
            "solution_norm": coeffs.solution_norm,
            "condition": self.factors.condition(),
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "path_id": cauchy.path_id,
            "delta": cauchy.delta,
        }
        for name, sl in self.blocks.items():
            report[f"residual_{name}"] = float(np.sqrt(np.mean(raw[sl] ** 2)))
        report["time_select"] = t_sel
        for k, v in self.timings.items():
            report[f"time_{k}"] = v
        return coeffs, report

    def gamma_trace(self, cauchy: CauchySample, f: Callable) -> dict:
        """Residual norm, solution norm and GCV value on the default gamma grid."""
        bs = _rhs(cauchy, f, self.interior_pts, self.domain.n, self.config.use_h1_t) * self.row_scale
        grid = default_gamma_grid(self.factors.S, self.config.grid_size)
        res, sol = lcurve_points(self.factors, bs, grid)
        return {"gamma": grid, "residual_norm": res, "solution_norm": sol,
                "gcv": gcv_values(self.factors, bs, grid)}

    def evaluation_matrix(self, points: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Basis values on ``points x times`` (time-major), cached for reuse."""
        points = np.asarray(points, dtype=float).reshape(-1, self.domain.n)
        times = np.asarray(times, dtype=float)
        key = (points.tobytes(), times.tobytes())
        if self._eval_cache is not None and self._eval_cache[0] == key:
            return self._eval_cache[1]
        n = self.domain.n
        P = np.repeat(points[None, :, :], len(times), axis=0).reshape(-1, n)
        T = np.repeat(times, len(points))
        Phi = basis_matrix("value", P, T, self.green_layout, self.mq_layout, self.config.c, n,
                           norm=self.config.green_norm)
        self._eval_cache = (key, Phi)
        return Phi

    def evaluate(self, coeffs: RegularizedCoefficients, points: np.ndarray, times: np.ndarray, path_id: int = 0):
        from .forward import DiscreteField

        points = np.asarray(points, dtype=float).reshape(-1, self.domain.n)
        Phi = self.evaluation_matrix(points, times)
        vals = (Phi @ coeffs.vector).reshape(len(times), len(points))
        return DiscreteField(points=points, times=np.asarray(times, dtype=float), values=vals, path_id=path_id)


def solve_inverse(
    domain: SpaceTimeDomain,
    cauchy: CauchySample,
    f: Callable,
    config: Optional[InverseConfig] = None,
    eval_points: Optional[np.ndarray] = None,
    eval_times: Optional[np.ndarray] = None,
    solver: Optional[InverseSolver] = None,
) -> InverseSolution:
    """Full pipeline: sources, assembly, SVD, gamma choice, solve, evaluation.

    With ``eval_points`` and ``eval_times`` the reconstructed field is
    returned on their product; otherwise ``field`` is ``None``.
    """
    config = config or InverseConfig()
    if solver is None:
        solver = InverseSolver(domain, cauchy.trace, config)
    coeffs, report = solver.solve(cauchy, f)
    fld = None
    if eval_points is not None and eval_times is not None:
        try:
            t0 = time.perf_counter()
            fld = solver.evaluate(coeffs, eval_points, eval_times, path_id=cauchy.path_id)
            report["time_reconstruct"] = time.perf_counter() - t0
        except Exception as exc:
            raise PipelineError("reconstruct", exc) from exc
    return InverseSolution(coeffs=coeffs, field=fld, report=report)
