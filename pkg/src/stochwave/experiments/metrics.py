"""Relative ensemble errors E1 (pointwise), E2 (per point) and E3 (per time).

Fields are arrays of shape ``(n_times, n_points)``. Sums over paths are
folded in a fixed order so results do not depend on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ErrorAccumulator", "ErrorReport", "metric_e1", "metric_e2", "metric_e3", "summarize"]

E1_FLOOR = 1e-8


class ErrorAccumulator:
    """Running sums over paths from which E1, E2 and E3 are formed.

    ``time_weights`` and ``space_weights`` are the quadrature weights of the
    evaluation grid.
    """

    def __init__(self, shape, time_weights=None, space_weights=None):
        nt, nx = shape
        self.shape = (nt, nx)
        self.wt = np.ones(nt) if time_weights is None else np.asarray(time_weights, dtype=float)
        self.wx = np.ones(nx) if space_weights is None else np.asarray(space_weights, dtype=float)
        self.count = 0
        self.sum_d = np.zeros(shape)
        self.sum_r = np.zeros(shape)
        self.sum_rec = np.zeros(shape)
        self.sum_dd = np.zeros(shape)
        self.sum_rr = np.zeros(shape)
        self.sum_abs = 0.0
        self.path_errors = []

    def add(self, ref: np.ndarray, rec: np.ndarray) -> None:
        ref = np.asarray(ref, dtype=float)
        rec = np.asarray(rec, dtype=float)
        if ref.shape != self.shape or rec.shape != self.shape:
            raise ValueError(f"fields must have shape {self.shape}")
        d = rec - ref
        self.count += 1
        self.sum_d += d
        self.sum_r += ref
        self.sum_rec += rec
        self.sum_dd += d * d
        self.sum_rr += ref * ref
        self.sum_abs += float(np.mean(np.abs(ref)))
        w = self.wt[:, None] * self.wx[None, :]
        den = np.sum(w * ref * ref)
        self.path_errors.append(float(np.sqrt(np.sum(w * d * d) / den)) if den > 0 else float("nan"))

    def _need(self):
        if self.count == 0:
            raise ValueError("no paths accumulated")

    def mean_reference(self) -> np.ndarray:
        self._need()
        return self.sum_r / self.count

    def mean_reconstruction(self) -> np.ndarray:
        self._need()
        return self.sum_rec / self.count

    def e1(self) -> np.ndarray:
        self._need()
        mean_d = np.abs(self.sum_d / self.count)
        mean_r = np.abs(self.sum_r / self.count)
        eps = E1_FLOOR * self.sum_abs / self.count
        den = np.maximum(mean_r, eps)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = mean_d / den
        return np.where(den > 0, out, np.where(mean_d == 0, 0.0, np.nan))

    @staticmethod
    def _ratio(num, den):
        out = np.full(num.shape, np.nan)
        ok = den > 0
        out[ok] = np.sqrt(num[ok] / den[ok])
        return out

    def e2_numerator(self) -> np.ndarray:
        return self.wt @ self.sum_dd / max(self.count, 1)

    def e3_numerator(self) -> np.ndarray:
        return self.sum_dd @ self.wx / max(self.count, 1)

    def e2(self) -> np.ndarray:
        self._need()
        return self._ratio(self.wt @ self.sum_dd, self.wt @ self.sum_rr)

    def e3(self) -> np.ndarray:
        self._need()
        return self._ratio(self.sum_dd @ self.wx, self.sum_rr @ self.wx)


def _stack(fields_):
    a = np.asarray(fields_, dtype=float)
    return a[None] if a.ndim == 2 else a


def _fold(ref, rec, time_weights=None, space_weights=None) -> ErrorAccumulator:
    ref, rec = _stack(ref), _stack(rec)
    if ref.shape != rec.shape:
        raise ValueError("reference and reconstruction grids do not conform")
    acc = ErrorAccumulator(ref.shape[1:], time_weights, space_weights)
    for r, z in zip(ref, rec):
        acc.add(r, z)
    return acc


def metric_e1(ref, rec) -> np.ndarray:
    """``|mean(rec - ref)| / max(|mean(ref)|, eps)`` with ``eps = 1e-8 mean|ref|``.

    ``ref`` and ``rec`` are one field ``(n_t, K)`` or a stack ``(paths, n_t, K)``.
    """
    return _fold(ref, rec).e1()


def metric_e2(ref, rec, time_weights=None) -> np.ndarray:
    """Per-point relative L2-in-time error; NaN where the reference vanishes."""
    return _fold(ref, rec, time_weights=time_weights).e2()


def metric_e3(ref, rec, space_weights=None) -> np.ndarray:
    """Per-time relative L2-in-space error; NaN where the reference vanishes."""
    return _fold(ref, rec, space_weights=space_weights).e3()


def summarize(values: np.ndarray) -> dict:
    """Max and mean over the finite entries (NaN sentinels excluded)."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"max": float("nan"), "mean": float("nan")}
    return {"max": float(v.max()), "mean": float(v.mean())}


@dataclass
class ErrorReport:
    points: np.ndarray
    times: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    gammas: list
    path_errors: list
    failed: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        out = {}
        for name in ("e1", "e2", "e3"):
            s = summarize(getattr(self, name))
            out[f"{name}_max"] = s["max"]
            out[f"{name}_mean"] = s["mean"]
        g = np.asarray(self.gammas, dtype=float)
        out["gamma_mean"] = float(g.mean()) if g.size else float("nan")
        pe = np.asarray(self.path_errors, dtype=float)
        pe = pe[np.isfinite(pe)]
        out["path_error_median"] = float(np.median(pe)) if pe.size else float("nan")
        out["n_paths_ok"] = len(self.gammas)
        out["n_paths_failed"] = len(self.failed)
        return out

    def e2_on(self, lo, hi, axis: int = 0) -> np.ndarray:
        """E2 restricted to points whose coordinate ``axis`` lies in ``[lo, hi]``."""
        x = self.points[:, axis]
        return self.e2[(x >= lo - 1e-12) & (x <= hi + 1e-12)]

    def e3_on(self, lo, hi) -> np.ndarray:
        return self.e3[(self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)]
