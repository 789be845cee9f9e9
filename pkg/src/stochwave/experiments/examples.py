"""The six benchmark problems and their default discretizations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..forward import ForwardProblem
from ..geometry import Disk, Interval, LeafCurve, SpaceTimeDomain, UnitSquare

__all__ = ["Example", "EXAMPLES", "get_example"]

PI = np.pi


def _x(p):
    return np.asarray(p, dtype=float)[..., 0]


def _y(p):
    return np.asarray(p, dtype=float)[..., 1]


def _zeros(p, t=None):
    return np.zeros(np.asarray(p).shape[0])


@dataclass(frozen=True)
class Example:
    """Data of one benchmark and the solver that produces its reference field.

    ``exact`` is the solution of the noise-free problem where one is known;
    for the stochastic problem it is the expectation of the solution.
    ``solver`` is ``fd`` (interval, square) or ``meshless`` (disk, leaf).
    """

    key: str
    domain: SpaceTimeDomain
    z0: Callable
    z0_dot: Callable
    f: Callable
    h1: Callable
    solver: str
    exact: Optional[Callable] = None
    description: str = ""

    @property
    def n(self) -> int:
        return self.domain.n

    def problem(self, b4_on: bool = True) -> ForwardProblem:
        return ForwardProblem(self.domain, self.z0, self.z0_dot, self.f, self.h1, b4_on=b4_on)


def _tent(p):
    x = _x(p)
    return np.where(x < 0.7, x / 0.7, (1.0 - x) / 0.3)


def _bump(p):
    x, y = _x(p), _y(p)
    inside = (x >= 0.4) & (x <= 0.6) & (y >= 0.4) & (y <= 0.6)
    return inside.astype(float)


_UNIT = SpaceTimeDomain(Interval(0.0, 1.0))

EXAMPLES = {
    "1d-a": Example(
        key="1d-a",
        domain=_UNIT,
        z0=lambda p: np.exp(_x(p)),
        z0_dot=lambda p: np.exp(_x(p)),
        f=lambda p, t: np.zeros(np.shape(p)[0]) + 0.0 * np.asarray(t, dtype=float),
        h1=lambda p, t: np.exp(_x(p) + t),
        solver="fd",
        exact=lambda p, t: np.exp(_x(p) + t),
        description="exponential data, mean solution exp(x + t)",
    ),
    "1d-b": Example(
        key="1d-b",
        domain=_UNIT,
        z0=lambda p: np.sin(PI * _x(p)),
        z0_dot=lambda p: -np.sin(PI * _x(p)),
        f=lambda p, t: (1.0 + PI**2) * np.sin(PI * _x(p)) * np.exp(-np.asarray(t, dtype=float)),
        h1=_zeros,
        solver="fd",
        exact=lambda p, t: np.sin(PI * _x(p)) * np.exp(-t),
        description="decaying sine mode with a matching source",
    ),
    "1d-c": Example(
        key="1d-c",
        domain=_UNIT,
        z0=_tent,
        z0_dot=_zeros,
        f=lambda p, t: np.zeros(np.shape(p)[0]) + 0.0 * np.asarray(t, dtype=float),
        h1=_zeros,
        solver="fd",
        description="plucked string with the kink at x = 0.7",
    ),
    "2d-a": Example(
        key="2d-a",
        domain=SpaceTimeDomain(Disk((0.0, 0.0), 1.0)),
        z0=_zeros,
        z0_dot=_zeros,
        f=lambda p, t: 2.0 * (1.0 + PI**2 * np.asarray(t) ** 2) * np.sin(PI * (_x(p) + _y(p))),
        h1=lambda p, t: t * t * np.sin(PI * (_x(p) + _y(p))),
        solver="meshless",
        exact=lambda p, t: t * t * np.sin(PI * (_x(p) + _y(p))),
        description="unit disk, solution t^2 sin(pi (x1 + x2)) without noise",
    ),
    "2d-b": Example(
        key="2d-b",
        domain=SpaceTimeDomain(LeafCurve()),
        z0=_zeros,
        z0_dot=_zeros,
        f=lambda p, t: 2.0 * (1.0 + PI**2 * np.asarray(t) ** 2) * np.cos(PI * _x(p)) * np.cos(PI * _y(p)),
        h1=lambda p, t: t * t * np.cos(PI * _x(p)) * np.cos(PI * _y(p)),
        solver="meshless",
        exact=lambda p, t: t * t * np.cos(PI * _x(p)) * np.cos(PI * _y(p)),
        description="leaf r = sin 2theta, solution t^2 cos(pi x1) cos(pi x2) without noise",
    ),
    "2d-c": Example(
        key="2d-c",
        domain=SpaceTimeDomain(UnitSquare()),
        z0=_bump,
        z0_dot=_zeros,
        f=lambda p, t: np.zeros(np.shape(p)[0]) + 0.0 * np.asarray(t, dtype=float),
        h1=_zeros,
        solver="fd",
        description="unit square, indicator of [0.4, 0.6]^2 as initial value",
    ),
}


def get_example(key: str) -> Example:
    try:
        return EXAMPLES[key]
    except KeyError:
        raise ValueError(f"unknown example {key!r}; choose from {sorted(EXAMPLES)}") from None
