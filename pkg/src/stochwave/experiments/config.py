"""Run configuration with per-example defaults."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from typing import Optional

from ..inverse import InverseConfig
from .examples import EXAMPLES

__all__ = ["ExperimentConfig", "DEFAULTS", "make_config"]

_ONE_D = dict(
    n_paths=100, delta=0.03, c=0.6, R=1.5, n_green=40, n_mq=225, mq_pad=0.5,
    n_interior=20, n_interior_t=20, n_b=2, n_t=51,
    h=1.0 / 100, tau=1.0 / 200, eval_stride=1, eval_nt=51,
)
_TWO_D = dict(
    n_paths=10, delta=0.01, c=2.5, R=1.5, n_green=240, n_mq=512, mq_pad=0.5,
    n_interior=60, n_interior_t=11, n_b=40, n_t=21, tau=1.0 / 200,
    eval_stride=3, eval_nt=21,
)

DEFAULTS = {
    "1d-a": dict(_ONE_D),
    "1d-b": dict(_ONE_D),
    "1d-c": dict(_ONE_D),
    "2d-a": dict(_TWO_D, nodes_interior=700, nodes_boundary=100, meshless_eps=4.0),
    "2d-b": dict(_TWO_D, nodes_interior=500, nodes_boundary=100, meshless_eps=12.0),
    "2d-c": dict(_TWO_D, delta=0.07, h=1.0 / 50, tau=1.0 / 100, eval_stride=5),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run; results are a pure function of it.

    Forward resolution: ``h`` and ``tau`` for finite differences,
    ``nodes_interior``/``nodes_boundary``/``meshless_eps`` and ``tau`` for the
    meshless solver. Trace layout: ``n_b`` boundary points times ``n_t``
    levels. Metrics are taken on every ``eval_stride``-th forward node at
    ``eval_nt`` uniform times.
    """

    example: str
    n_paths: int
    delta: float
    c: float
    R: float
    n_green: int
    n_mq: int
    mq_pad: float
    n_interior: int
    n_interior_t: int
    n_b: int
    n_t: int
    tau: float
    eval_stride: int
    eval_nt: int
    h: Optional[float] = None
    nodes_interior: Optional[int] = None
    nodes_boundary: Optional[int] = None
    meshless_eps: Optional[float] = None
    reg: str = "gcv"
    green_norm: str = "sqrt2pi"
    use_h1_t: bool = False
    seed: int = 42
    out: str = "results"

    def __post_init__(self):
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if not (self.c > 0 and self.R > 0):
            raise ValueError("c and R must be positive")

    def inverse_config(self) -> InverseConfig:
        return InverseConfig(
            c=self.c, R=self.R, n_green=self.n_green, n_mq=self.n_mq, mq_pad=self.mq_pad,
            n_interior=self.n_interior, n_interior_t=self.n_interior_t, reg=self.reg,
            use_h1_t=self.use_h1_t, green_norm=self.green_norm,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self, keys=None) -> str:
        """Stable hash of the config (or of the named subset of fields)."""
        d = self.to_dict()
        d.pop("out")
        if keys is not None:
            d = {k: d[k] for k in keys}
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def forward_digest(self) -> str:
        keys = ["example", "n_paths", "delta", "seed", "h", "tau", "nodes_interior",
                "nodes_boundary", "meshless_eps", "n_b", "n_t"]
        return self.digest(keys)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def make_config(example: str, **overrides) -> ExperimentConfig:
    """Defaults for ``example`` with ``None``-valued overrides ignored."""
    if example not in DEFAULTS:
        raise ValueError(f"unknown example {example!r}; choose from {sorted(DEFAULTS)}")
    values = dict(DEFAULTS[example])
    names = {f.name for f in fields(ExperimentConfig)}
    for k, v in overrides.items():
        if k not in names:
            raise TypeError(f"unknown config field {k!r}")
        if v is not None:
            values[k] = v
    return ExperimentConfig(example=example, **values)
