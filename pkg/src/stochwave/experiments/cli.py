"""Command line: ``stochwave {forward,invert,ensemble,sweep,reproduce}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..inverse import InverseSolver, solve_inverse
from .config import make_config
from .driver import SWEEP_AXES, ForwardSetup, forward_data, run_ensemble, sweep
from .examples import EXAMPLES, get_example
from .io import (
    cache_path,
    load_forward,
    output_name,
    save_forward,
    write_csv,
    write_field,
    write_manifest,
    write_report,
    write_sweep,
)

log = logging.getLogger("stochwave")


def _common(p: argparse.ArgumentParser, example_flag: bool = True) -> None:
    if example_flag:
        p.add_argument("--example", required=True, choices=sorted(EXAMPLES))
    p.add_argument("--paths", type=int, default=None, help="number of sample paths")
    p.add_argument("--delta", type=float, default=None, help="relative noise level, e.g. 0.03")
    p.add_argument("--c", type=float, default=None, help="multiquadric shape parameter")
    p.add_argument("--R", type=float, default=None, help="source offset")
    p.add_argument("--reg", default=None, help="gcv, lcurve or fixed:<gamma>")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochwave", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="generate and cache forward data with noisy traces")
    _common(p)
    p = sub.add_parser("invert", help="reconstruct one sample path")
    _common(p)
    p.add_argument("--path", type=int, default=0, help="path index")
    p = sub.add_parser("ensemble", help="full ensemble run with error metrics")
    _common(p)
    p = sub.add_parser("sweep", help="one ensemble per parameter value")
    _common(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma separated values")
    p = sub.add_parser("reproduce", help="ensemble with the default settings of an example")
    p.add_argument("example_id", choices=sorted(EXAMPLES))
    _common(p, example_flag=False)
    return parser


def _config(args, example: str):
    cfg = make_config(
        example,
        n_paths=args.paths,
        delta=args.delta,
        c=args.c,
        R=args.R,
        reg=args.reg,
        seed=args.seed,
        out=args.out,
    )
    return cfg


def _forward(cfg) -> dict:
    data = forward_data(cfg)
    out = Path(cfg.out)
    cp = save_forward(data, cache_path(cfg, out / "cache"))
    rows = []
    for cs in data.cauchy:
        tr = cs.trace
        for i in range(len(tr)):
            rows.append([cs.path_id, *tr.x[i], tr.t[i], cs.h1[i], cs.h2[i]])
    xs = [f"x{i + 1}" for i in range(data.cauchy[0].trace.x.shape[1])]
    csv_path = write_csv(out / output_name(cfg, "cauchy"), ["path", *xs, "t", "h1", "h2"], rows)
    write_manifest(out / output_name(cfg, "manifest").replace(".csv", ".json"), cfg, "forward",
                   {"cache": cp, "cauchy": csv_path})
    print(f"wrote {csv_path} and {cp}")
    return {"cauchy": csv_path, "cache": cp}


def _invert(cfg, k: int) -> dict:
    setup = ForwardSetup(cfg)
    fld = setup.solve(k)
    cs = setup.cauchy(fld, k)
    ex = get_example(cfg.example)
    solver = InverseSolver(ex.domain, cs.trace, cfg.inverse_config())
    sol = solve_inverse(ex.domain, cs, ex.f, cfg.inverse_config(), setup.eval_points, setup.eval_times,
                        solver=solver)
    out = Path(cfg.out)
    fp = write_field(out / output_name(cfg, f"field{k}"), setup.eval_points, setup.eval_times,
                     setup.reference(fld), sol.field.values)
    tr = solver.gamma_trace(cs, ex.f)
    cols = ["gamma", "residual_norm", "solution_norm", "gcv"]
    gp = write_csv(out / output_name(cfg, f"gamma{k}"), cols, zip(*(tr[c] for c in cols)))
    rep = {key: v for key, v in sol.report.items() if not key.startswith("time_")}
    write_manifest(out / output_name(cfg, f"manifest{k}").replace(".csv", ".json"), cfg, "invert",
                   {"field": fp, "gamma_trace": gp}, summary=rep)
    print(f"path {k}: gamma = {sol.coeffs.gamma:.3e} ({sol.report['reg']}), wrote {fp}")
    return {"field": fp, "gamma_trace": gp}


def _ensemble(cfg, command: str) -> dict:
    cached = cache_path(cfg, Path(cfg.out) / "cache")
    data = load_forward(cached) if cached.exists() else None
    if data is not None:
        log.info("using cached forward data %s", cached)
    res = run_ensemble(cfg, data=data)
    out = Path(cfg.out)
    paths = write_report(res.report, cfg, out)
    paths["mean_field"] = write_field(out / output_name(cfg, "mean"), res.report.points, res.report.times,
                                      res.mean_reference, res.mean_reconstruction)
    summary = res.report.summary
    write_manifest(out / output_name(cfg, "manifest").replace(".csv", ".json"), cfg, command, paths, summary)
    print(
        f"{cfg.example}: {summary['n_paths_ok']} paths, "
        f"E2 mean {summary['e2_mean']:.4f} max {summary['e2_max']:.4f}, "
        f"E3 mean {summary['e3_mean']:.4f} max {summary['e3_max']:.4f}, "
        f"{res.elapsed:.1f} s"
    )
    return paths


def _sweep(cfg, axis: str, values: str) -> dict:
    vals = [float(v) for v in values.split(",") if v.strip()]
    rows = sweep(cfg, axis, vals)
    out = Path(cfg.out)
    p = write_sweep(out / output_name(cfg, f"sweep-{axis}"), axis, rows)
    write_manifest(out / output_name(cfg, f"sweep-{axis}-manifest").replace(".csv", ".json"), cfg, "sweep", {"sweep": p})
    for r in rows:
        print(f"{axis}={r['value']:g}: E2 mean {r['e2_mean']:.4f}, E3 max {r['e3_max']:.4f} [{r['status']}]")
    return {"sweep": p}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    example = args.example_id if args.command == "reproduce" else args.example
    try:
        cfg = _config(args, example)
        if args.command == "forward":
            _forward(cfg)
        elif args.command == "invert":
            _invert(cfg, args.path)
        elif args.command in ("ensemble", "reproduce"):
            _ensemble(cfg, args.command)
        elif args.command == "sweep":
            _sweep(cfg, args.axis, args.values)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
