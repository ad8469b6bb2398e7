"""Wiener additive processes on a time grid: simulation from a conditional
variance path, the Girsanov log-likelihood ratio, and the equivalence verdict
against standard Brownian motion."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import RandomStream, ValidationError, _frozen


def _check_grid(grid: np.ndarray) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValidationError("grid needs at least two points")
    if g[0] != 0 or np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
        raise ValidationError("grid must start at 0 and increase strictly")
    return g


@dataclass(frozen=True)
class GaussianPath:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = _check_grid(self.grid)
        v = np.asarray(self.values, dtype=float)
        if v.shape != g.shape or not np.all(np.isfinite(v)):
            raise ValidationError("path values must be finite and match the grid")
        if v[0] != 0:
            raise ValidationError("path must start at 0")
        object.__setattr__(self, "grid", _frozen(g))
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True)
class VariancePath:
    """Conditional variance A_t on the grid; A_0 = 0, non-decreasing."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = _check_grid(self.grid)
        v = np.asarray(self.values, dtype=float)
        if v.shape != g.shape or not np.all(np.isfinite(v)):
            raise ValidationError("variance values must be finite and match the grid")
        if v[0] != 0 or np.any(np.diff(v) < 0):
            raise ValidationError("variance path must start at 0 and be non-decreasing")
        object.__setattr__(self, "grid", _frozen(g))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def linear(cls, slope: float, horizon: float, steps: int) -> "VariancePath":
        grid = np.linspace(0.0, horizon, steps + 1)
        return cls(grid, slope * grid)


@dataclass(frozen=True)
class VelocityPath:
    """Drift phi on the grid; phi[k] acts on [t_k, t_{k+1})."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = _check_grid(self.grid)
        v = np.asarray(self.values, dtype=float)
        if v.shape != g.shape or not np.all(np.isfinite(v)):
            raise ValidationError("velocity values must be finite and match the grid")
        object.__setattr__(self, "grid", _frozen(g))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, value: float, grid) -> "VelocityPath":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full(grid.size, float(value)))


def simulate_wiener_additive(A: VariancePath, stream: RandomStream) -> GaussianPath:
    """Independent N(0, A_{k+1} - A_k) increments, cumulated from W_0 = 0."""
    return _simulate(A, stream.generator())


def _simulate(A: VariancePath, gen: np.random.Generator) -> GaussianPath:
    scale = np.sqrt(np.diff(A.values))
    steps = gen.standard_normal(scale.size) * scale
    return GaussianPath(A.grid, np.concatenate(([0.0], np.cumsum(steps))))


def shift_by_velocity(B: GaussianPath, phi: VelocityPath) -> GaussianPath:
    """W = B + int_0^t phi ds with left-point quadrature."""
    if B.grid.shape != phi.grid.shape or np.any(B.grid != phi.grid):
        raise ValidationError("path and velocity grids differ")
    drift = np.concatenate(([0.0], np.cumsum(phi.values[:-1] * np.diff(B.grid))))
    return GaussianPath(B.grid, B.values + drift)


def girsanov_log_ratio(W: GaussianPath, phi: VelocityPath) -> float:
    """sum phi_k dW_k - 1/2 sum phi_k^2 dt_k with phi taken at the left point."""
    if W.grid.shape != phi.grid.shape or np.any(W.grid != phi.grid):
        raise ValidationError("path and velocity grids differ")
    f = phi.values[:-1]
    return float(f @ np.diff(W.values) - 0.5 * (f * f) @ np.diff(W.grid))


class VarianceVerdict(NamedTuple):
    equivalent: bool
    exceptional_measure: float
    resolution: float

    @property
    def verdict(self) -> str:
        return "equivalent" if self.equivalent else "singular"


def variance_equivalence_check(A: VariancePath, tol: float) -> VarianceVerdict:
    """Equivalent to standard Brownian motion iff the cells whose slope is
    more than ``tol`` away from 1 total at most one grid cell."""
    if not tol > 0:
        raise ValidationError("tol must be > 0")
    dt = np.diff(A.grid)
    slope = np.diff(A.values) / dt
    bad = float(dt[np.abs(slope - 1.0) > tol].sum())
    resolution = float(dt.max())
    return VarianceVerdict(bad <= resolution, bad, resolution)
