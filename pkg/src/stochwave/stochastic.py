"""Seeded Brownian paths and multiplicative measurement noise.

Every random stream is a Philox counter-based generator keyed by
``(seed, index)``, so path ``k`` of an ensemble depends only on the master
seed and ``k``. Gaussian variates come from the inverse normal CDF applied to
53-bit uniforms on the open interval (0, 1); that transform is part of the
reproducibility contract.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "BrownianPath",
    "NoiseSpec",
    "stream",
    "uniforms",
    "normals",
    "generate_path",
    "add_noise",
]

_MASK64 = (1 << 64) - 1

# stream ids kept apart in the high counter word
BROWNIAN_STREAM = 0
NOISE_STREAM = 1


def stream(seed: int, index: int = 0, stream_id: int = 0) -> np.random.Philox:
    """Philox bit generator for ``(seed, index)`` on substream ``stream_id``."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(stream_id) & _MASK64], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


def uniforms(bitgen: np.random.Philox, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1) from the top 53 bits of raw draws."""
    raw = bitgen.random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(bitgen: np.random.Philox, size: int) -> np.ndarray:
    return ndtri(uniforms(bitgen, size))


@dataclass(frozen=True)
class BrownianPath:
    """One discrete Wiener trajectory on a uniform grid of ``M`` steps."""

    seed: int
    index: int
    T: float
    increments: np.ndarray

    @property
    def M(self) -> int:
        return len(self.increments)

    @property
    def dt(self) -> float:
        return self.T / self.M

    def values(self) -> np.ndarray:
        """``W(t_k)`` for ``k = 0..M`` with ``W(0) = 0``."""
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    @classmethod
    def zero(cls, M: int, T: float = 1.0) -> "BrownianPath":
        return cls(seed=0, index=0, T=T, increments=np.zeros(M))


def generate_path(seed: int, M: int, T: float = 1.0, index: int = 0) -> BrownianPath:
    """Draw ``M`` increments ``dW_k ~ N(0, T/M)`` for path ``index`` of ``seed``."""
    if M < 1:
        raise ValueError("a Brownian path needs at least one step")
    if not T > 0:
        raise ValueError("T must be positive")
    dt = T / M
    inc = np.sqrt(dt) * normals(stream(seed, index, BROWNIAN_STREAM), M)
    inc.setflags(write=False)
    return BrownianPath(seed=int(seed), index=int(index), T=float(T), increments=inc)


@dataclass(frozen=True)
class NoiseSpec:
    """Relative noise level ``delta`` and the seed of its draws."""

    delta: float
    seed: int = 0
    index: int = 0
    targets: tuple = ("h1", "h2")

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("noise level must be non-negative")


def add_noise(data, spec: NoiseSpec):
    """Return a copy of ``data`` with each target trace scaled by ``1 + delta*theta``.

    ``theta`` is i.i.d. uniform on [-1, 1]. Targets are drawn in the order
    listed in ``spec.targets`` from one stream, so corruption of ``h1`` and
    ``h2`` is independent. ``delta = 0`` returns the values unchanged.
    """
    if spec.delta == 0:
        return dataclasses.replace(data, delta=0.0)
    bitgen = stream(spec.seed, spec.index, NOISE_STREAM)
    changes = {}
    for name in spec.targets:
        v = np.asarray(getattr(data, name), dtype=float)
        theta = 2.0 * uniforms(bitgen, v.size).reshape(v.shape) - 1.0
        changes[name] = v * (1.0 + spec.delta * theta)
    return dataclasses.replace(data, delta=float(spec.delta), **changes)
