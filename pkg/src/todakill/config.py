"""Value types shared across the package."""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

WALL = "wall"
CHAIN = "chain"


@dataclass(frozen=True)
class ModelSpec:
    """Which killing model: the single particle near a soft wall, or the Toda chain."""

    kind: str
    n_particles: int
    xi: float

    def __post_init__(self):
        if self.kind not in (WALL, CHAIN):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise ValueError("xi must be positive and finite")
        if self.kind == WALL and self.n_particles != 1:
            raise ValueError("wall model has exactly one particle")
        if self.kind == CHAIN and self.n_particles < 2:
            raise ValueError("chain model needs at least two particles")

    @classmethod
    def wall(cls, xi):
        return cls(WALL, 1, float(xi))

    @classmethod
    def chain(cls, n, xi):
        return cls(CHAIN, int(n), float(xi))


@dataclass(frozen=True)
class Configuration:
    """Particle positions in R^N."""

    coords: Tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coords))
        if not all(math.isfinite(v) for v in c):
            raise ValueError("configuration entries must be finite")
        object.__setattr__(self, "coords", c)

    def __len__(self):
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    @property
    def in_weyl_chamber(self):
        return all(a < b for a, b in zip(self.coords, self.coords[1:]))


def as_coords(x):
    """Float array view of a Configuration, scalar or sequence."""
    if isinstance(x, Configuration):
        return np.asarray(x.coords, dtype=float)
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    # small-argument switch for imaginary-order Bessel functions
    small_z: float = 1e-6
    # terminal-integral truncation, in standard deviations
    box_sigmas: float = 8.0
    # Gauss-Legendre order per panel
    order: int = 16
    # panel refinements allowed before giving up
    max_refine: int = 5
    # nodes per dimension for Givental nested quadrature (N = 3)
    givental_nodes: int = 128
    strict: bool = True


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    n_paths: int
    seed: int = 0
    scheme: str = "fk"
    workers: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0):
            raise ValueError("dt and horizon must be positive")
        if self.dt > self.horizon * (1 + 1e-12):
            raise ValueError("dt must not exceed the horizon")
        if self.n_paths < 1 or self.workers < 1:
            raise ValueError("n_paths and workers must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.scheme not in ("fk", "hardkill"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_err: float
    n: int

    def within(self, other, k=3.0):
        """True when two estimates agree within ``k`` combined standard errors."""
        other_mean = other.mean if isinstance(other, Estimate) else float(other)
        other_err = other.std_err if isinstance(other, Estimate) else 0.0
        return abs(self.mean - other_mean) <= k * math.hypot(self.std_err, other_err)


@dataclass(frozen=True)
class DensityResult:
    value: float
    est_error: float
    method: str
    info: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)
