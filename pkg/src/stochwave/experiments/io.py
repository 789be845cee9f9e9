"""CSV outputs, run manifests and the forward-data cache."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..geometry import TraceGrid
from ..inverse import CauchySample
from .config import ExperimentConfig
from .driver import ForwardData
from .metrics import ErrorReport

__all__ = [
    "output_name",
    "write_csv",
    "write_report",
    "write_field",
    "write_sweep",
    "write_manifest",
    "save_forward",
    "load_forward",
    "cache_path",
]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def output_name(config: ExperimentConfig, kind: str) -> str:
    """``<example>_<delta>_<seed>_<kind>.csv``."""
    return f"{config.example}_{config.delta:g}_{config.seed}_{kind}.csv"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _coord_names(n: int):
    return [f"x{i + 1}" for i in range(n)]


def write_report(report: ErrorReport, config: ExperimentConfig, out_dir) -> dict:
    """Write E1, E2, E3 and per-path gamma tables; returns ``{kind: path}``."""
    out = Path(out_dir)
    n = report.points.shape[1]
    xs = _coord_names(n)
    paths = {}
    rows = []
    for k, t in enumerate(report.times):
        for j, p in enumerate(report.points):
            rows.append([*p, t, report.e1[k, j]])
    paths["e1"] = write_csv(out / output_name(config, "e1"), [*xs, "t", "e1"], rows)
    paths["e2"] = write_csv(
        out / output_name(config, "e2"), [*xs, "e2"], ([*p, e] for p, e in zip(report.points, report.e2))
    )
    paths["e3"] = write_csv(out / output_name(config, "e3"), ["t", "e3"], zip(report.times, report.e3))
    paths["gamma"] = write_csv(
        out / output_name(config, "gamma"), ["path", "gamma", "path_error"],
        ([i, g, e] for i, (g, e) in enumerate(zip(report.gammas, report.path_errors))),
    )
    paths["summary"] = write_csv(
        out / output_name(config, "summary"), ["metric", "value"], sorted(report.summary.items())
    )
    return paths


def write_field(path, points, times, ref, rec) -> Path:
    points = np.asarray(points)
    xs = _coord_names(points.shape[1])
    rows = []
    for k, t in enumerate(times):
        for j, p in enumerate(points):
            rows.append([*p, t, ref[k, j], rec[k, j]])
    return write_csv(path, [*xs, "t", "reference", "reconstruction"], rows)


def write_sweep(path, axis: str, rows) -> Path:
    keys = ["value", "e2_mean", "e2_max", "e3_mean", "e3_max", "gamma_mean", "path_error_median", "status"]
    header = [axis if k == "value" else k for k in keys]
    return write_csv(path, header, ([r[k] for k in keys] for r in rows))


def write_manifest(path, config: ExperimentConfig, command: str, outputs: dict, summary=None) -> Path:
    """JSON echo of the full config plus the produced files.

    Wall-clock timings are left out so that repeated runs write identical
    manifests.
    """
    from .. import __version__

    doc = {
        "command": command,
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.digest(),
        "outputs": {k: Path(v).name for k, v in sorted(outputs.items())},
    }
    if summary is not None:
        doc["summary"] = summary
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def cache_path(config: ExperimentConfig, cache_dir) -> Path:
    return Path(cache_dir) / f"{config.example}_forward_{config.forward_digest()}.npz"


def save_forward(data: ForwardData, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tr = data.cauchy[0].trace
    np.savez_compressed(
        path,
        points=data.points,
        times=data.times,
        time_weights=data.time_weights,
        space_weights=data.space_weights,
        path_ids=np.asarray(data.path_ids, dtype=np.int64),
        references=np.asarray(data.references),
        h1=np.asarray([c.h1 for c in data.cauchy]),
        h1_t=np.asarray([c.h1_t for c in data.cauchy]),
        h2=np.asarray([c.h2 for c in data.cauchy]),
        delta=np.asarray([c.delta for c in data.cauchy]),
        trace_x=tr.x,
        trace_nu=tr.nu,
        trace_t=tr.t,
        trace_shape=np.asarray([tr.n_b, tr.n_t]),
        failed=np.asarray(json.dumps(data.failed)),
    )
    return path


def load_forward(path) -> ForwardData:
    with np.load(path) as z:
        n_b, n_t = (int(v) for v in z["trace_shape"])
        trace = TraceGrid(x=z["trace_x"], nu=z["trace_nu"], t=z["trace_t"], n_b=n_b, n_t=n_t)
        ids = [int(k) for k in z["path_ids"]]
        cauchy = [
            CauchySample(trace, z["h1"][i], z["h1_t"][i], z["h2"][i], path_id=k, delta=float(z["delta"][i]))
            for i, k in enumerate(ids)
        ]
        return ForwardData(
            points=z["points"],
            times=z["times"],
            time_weights=z["time_weights"],
            space_weights=z["space_weights"],
            path_ids=ids,
            references=list(z["references"]),
            cauchy=cauchy,
            failed=json.loads(str(z["failed"])),
        )
