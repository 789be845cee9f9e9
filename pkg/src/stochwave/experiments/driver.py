"""Ensemble driver: forward data, noisy traces, reconstruction and metrics.

Path ``k`` uses Brownian stream ``(seed, k)`` and noise stream ``(seed, k)``,
so a run is a pure function of its :class:`ExperimentConfig`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ..forward import (
    CauchyExtractor,
    DiscreteField,
    MeshlessStepper,
    meshless_nodes,
    solve_fd,
    solve_meshless_2d,
)
from ..inverse import CauchySample, InverseSolver
from ..stochastic import NoiseSpec, add_noise, generate_path
from .config import ExperimentConfig
from .examples import get_example
from .metrics import ErrorAccumulator, ErrorReport

__all__ = ["EnsembleResult", "ForwardSetup", "ForwardData", "forward_data", "run_ensemble", "sweep", "SWEEP_AXES"]

log = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.10
SWEEP_AXES = ("delta", "c", "R", "n_paths")


class ForwardSetup:
    """Per-config forward machinery built once and reused for every path."""

    def __init__(self, config: ExperimentConfig):
        self.config = cfg = config
        self.example = ex = get_example(cfg.example)
        self.domain = ex.domain
        self.problem = ex.problem()
        self.M = int(round(self.domain.T / cfg.tau))
        self.nodes = None
        self.stepper = None
        if ex.solver == "meshless":
            self.nodes = meshless_nodes(self.domain, cfg.nodes_interior, cfg.nodes_boundary)
            self.stepper = MeshlessStepper(self.nodes, cfg.tau, eps=cfg.meshless_eps)
        self.extractor: Optional[CauchyExtractor] = None
        self.eval_points = None
        self.eval_index = None
        self.eval_time_index = None

    def solve(self, k: int) -> DiscreteField:
        cfg = self.config
        path = generate_path(cfg.seed, self.M, self.domain.T, index=k)
        if self.example.solver == "fd":
            fld = solve_fd(self.problem, cfg.h, cfg.tau, path)
        else:
            fld = solve_meshless_2d(self.problem, self.nodes, cfg.tau, path,
                                    eps=cfg.meshless_eps, stepper=self.stepper)
        if self.extractor is None:
            self._prepare(fld)
        return fld

    def _prepare(self, fld: DiscreteField) -> None:
        cfg = self.config
        eps = cfg.meshless_eps if cfg.meshless_eps is not None else 4.0
        self.extractor = CauchyExtractor(fld, self.domain, cfg.n_b, eps)
        s = cfg.eval_stride
        if fld.grid_shape is not None:
            idx = np.arange(len(fld.points)).reshape(fld.grid_shape)
            idx = idx[tuple(slice(None, None, s) for _ in fld.grid_shape)]
            self.eval_index = idx.ravel()
            cell = (fld.spacing * s) ** self.domain.n
            self.space_weights = np.full(len(self.eval_index), cell)
        else:
            self.eval_index = np.arange(0, len(fld.points), s)
            self.space_weights = np.full(len(self.eval_index), self.domain.shape.area() / len(self.eval_index))
        times = np.linspace(0.0, self.domain.T, cfg.eval_nt)
        ti = np.searchsorted(fld.times, times - 1e-12)
        ti = np.clip(ti, 0, len(fld.times) - 1)
        if not np.allclose(fld.times[ti], times, atol=1e-10):
            raise ValueError("evaluation times must lie on the forward time grid")
        self.eval_time_index = ti
        self.eval_points = fld.points[self.eval_index]
        self.eval_times = times
        self.time_weights = np.full(len(times), self.domain.T / max(len(times) - 1, 1))

    def reference(self, fld: DiscreteField) -> np.ndarray:
        return fld.values[self.eval_time_index][:, self.eval_index]

    def cauchy(self, fld: DiscreteField, k: int) -> CauchySample:
        cfg = self.config
        clean = self.extractor(fld, cfg.n_t)
        return add_noise(clean, NoiseSpec(cfg.delta, seed=cfg.seed, index=k))


@dataclass
class ForwardData:
    """Reference fields on the evaluation grid and noisy traces, per path."""

    points: np.ndarray
    times: np.ndarray
    time_weights: np.ndarray
    space_weights: np.ndarray
    path_ids: list
    references: list
    cauchy: list
    failed: list = field(default_factory=list)


def _iter_forward(setup: ForwardSetup, n_paths: int, failed: list) -> Iterator:
    for k in range(n_paths):
        try:
            fld = setup.solve(k)
            yield k, setup.reference(fld), setup.cauchy(fld, k)
        except Exception as exc:  # recorded and excluded, see MAX_FAILED_FRACTION
            log.warning("path %d failed in forward stage: %s", k, exc)
            failed.append({"path": k, "stage": "forward", "error": str(exc)})


def forward_data(config: ExperimentConfig, setup: Optional[ForwardSetup] = None) -> ForwardData:
    setup = setup or ForwardSetup(config)
    failed: list = []
    ids, refs, data = [], [], []
    for k, ref, cs in _iter_forward(setup, config.n_paths, failed):
        ids.append(k)
        refs.append(ref)
        data.append(cs)
    if setup.eval_points is None:
        raise RuntimeError("every forward solve failed")
    return ForwardData(setup.eval_points, setup.eval_times, setup.time_weights,
                       setup.space_weights, ids, refs, data, failed)


@dataclass
class EnsembleResult:
    """Mean reference and reconstruction fields with the error report.

    ``references`` and ``reconstructions`` hold every path when the run was
    asked to keep fields and are empty otherwise.
    """

    report: ErrorReport
    mean_reference: np.ndarray
    mean_reconstruction: np.ndarray
    references: list = field(default_factory=list)
    reconstructions: list = field(default_factory=list)
    solver_reports: list = field(default_factory=list)
    elapsed: float = 0.0


def _check_failures(failed: list, n_paths: int) -> None:
    if len(failed) > MAX_FAILED_FRACTION * n_paths:
        raise RuntimeError(
            f"{len(failed)} of {n_paths} paths failed (limit {MAX_FAILED_FRACTION:.0%}); "
            f"first failure: {failed[0]}"
        )


def run_ensemble(
    config: ExperimentConfig,
    keep_fields: bool = False,
    data: Optional[ForwardData] = None,
) -> EnsembleResult:
    """Forward solve, trace extraction with noise and reconstruction per path.

    With ``data`` (for instance loaded from a cache) the forward stage is
    skipped. Paths failing in any stage are excluded; more than 10% failed
    paths fail the run.
    """
    t0 = time.perf_counter()
    ex = get_example(config.example)
    failed: list = []
    if data is None:
        setup = ForwardSetup(config)
        source = _iter_forward(setup, config.n_paths, failed)
    else:
        setup = None
        failed.extend(data.failed)
        source = zip(data.path_ids, data.references, data.cauchy)

    solver = None
    acc = None
    gammas, reports, refs, recs = [], [], [], []
    for k, ref, cs in source:
        if acc is None:
            if data is None:
                points, times = setup.eval_points, setup.eval_times
                grid = setup
            else:
                points, times = data.points, data.times
                grid = data
            acc = ErrorAccumulator(ref.shape, grid.time_weights, grid.space_weights)
        try:
            if solver is None:
                solver = InverseSolver(ex.domain, cs.trace, config.inverse_config())
            coeffs, rep = solver.solve(cs, ex.f)
            rec = solver.evaluate(coeffs, points, times, path_id=k).values
        except Exception as exc:
            log.warning("path %d failed in inverse stage: %s", k, exc)
            failed.append({"path": k, "stage": "inverse", "error": str(exc)})
            continue
        acc.add(ref, rec)
        gammas.append(coeffs.gamma)
        reports.append(rep)
        if keep_fields:
            refs.append(ref)
            recs.append(rec)

    _check_failures(failed, config.n_paths)
    if acc is None or acc.count == 0:
        raise RuntimeError("no path completed")
    report = ErrorReport(
        points=points,
        times=times,
        e1=acc.e1(),
        e2=acc.e2(),
        e3=acc.e3(),
        gammas=gammas,
        path_errors=acc.path_errors,
        failed=failed,
        config=config.to_dict(),
    )
    return EnsembleResult(
        report=report,
        mean_reference=acc.mean_reference(),
        mean_reconstruction=acc.mean_reconstruction(),
        references=refs,
        reconstructions=recs,
        solver_reports=reports,
        elapsed=time.perf_counter() - t0,
    )


def sweep(config: ExperimentConfig, axis: str, values) -> list:
    """One ensemble per value of ``axis`` with the shared master seed.

    Returns rows with the value, E2/E3 summaries, mean gamma and the median
    per-path error; a cell that raises is kept with ``status = "failed"``.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        v = int(v) if axis == "n_paths" else float(v)
        row = {"value": v}
        try:
            res = run_ensemble(config.replace(**{axis: v}))
        except Exception as exc:
            log.warning("sweep cell %s=%s failed: %s", axis, v, exc)
            row.update(e2_mean=np.nan, e2_max=np.nan, e3_mean=np.nan, e3_max=np.nan,
                       gamma_mean=np.nan, path_error_median=np.nan, status="failed")
        else:
            s = res.report.summary
            row.update(
                e2_mean=s["e2_mean"], e2_max=s["e2_max"], e3_mean=s["e3_mean"], e3_max=s["e3_max"],
                gamma_mean=s["gamma_mean"], path_error_median=s["path_error_median"], status="ok",
            )
        rows.append(row)
    return rows
