"""Finite-state Markov chains: likelihood ratio against a reference chain,
the support (absolute continuity) check over all transition powers, the
martingale residual, and the empirical transition MLE."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import NumericFailure, RandomStream, ValidationError, _frozen, _StreamFactory


class AbsoluteContinuityError(NumericFailure):
    """A transition possible under P is impossible under the reference P0."""


@dataclass(frozen=True)
class MarkovModel:
    p: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        v0 = np.asarray(self.v0, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or not 2 <= p.shape[0] <= 64:
            raise ValidationError("transition matrix must be square with 2..64 states")
        if v0.shape != (p.shape[0],):
            raise ValidationError("initial distribution must have one entry per state")
        if np.any(p < 0) or np.any(p > 1) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-12):
            raise ValidationError("rows of P must be probability vectors (sum to 1 within 1e-12)")
        if np.any(v0 < 0) or abs(v0.sum() - 1) > 1e-12:
            raise ValidationError("initial distribution must be a probability vector")
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "v0", _frozen(v0))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "MarkovModel":
        return cls(np.full((n, n), 1.0 / n), np.full(n, 1.0 / n))

    def path_probability(self, path: Sequence[int]) -> float:
        x = np.asarray(path)
        return float(self.v0[x[0]] * np.prod(self.p[x[:-1], x[1:]]))

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p.tolist(), "v0": self.v0.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MarkovModel":
        try:
            model = cls(np.asarray(d["p"], dtype=float), np.asarray(d["v0"], dtype=float))
        except KeyError as exc:
            raise ValidationError(f"Markov model JSON is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise ValidationError("Markov model JSON fields 'p' and 'v0' must be numeric arrays") from None
        if "n" in d and d["n"] != model.n:
            raise ValidationError(f"field 'n'={d['n']} does not match a {model.n}-state matrix")
        return model


def _check_path(path, n: int) -> np.ndarray:
    x = np.asarray(path)
    if x.ndim != 1 or x.size == 0 or not np.issubdtype(x.dtype, np.integer):
        raise ValidationError("state path must be a non-empty sequence of integers")
    if np.any(x < 0) or np.any(x >= n):
        raise ValidationError(f"state indices must lie in [0, {n})")
    return x


def markov_log_ratio(path: Sequence[int], P: MarkovModel, P0: MarkovModel) -> float:
    """sum_i log(P[x_i, x_{i+1}] / P0[x_i, x_{i+1}])."""
    if P.n != P0.n:
        raise ValidationError("models have different state counts")
    if np.any(np.abs(P.v0 - P0.v0) > 1e-12):
        raise ValidationError("models must share the initial distribution")
    x = _check_path(path, P.n)
    num = P.p[x[:-1], x[1:]]
    den = P0.p[x[:-1], x[1:]]
    bad = (den == 0) & (num > 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise AbsoluteContinuityError(
            f"transition {x[i]}->{x[i + 1]} at step {i} has P0 = 0 but P > 0"
        )
    if np.any(num == 0):
        return -math.inf
    return float(np.log(num / den).sum())


class ContinuityVerdict(NamedTuple):
    passed: bool
    witness: Optional[tuple]  # (m, from_state, to_state)
    powers_checked: int


def abs_continuity_check(P: MarkovModel, P0: MarkovModel) -> ContinuityVerdict:
    """support(P^m) within support(P0^m) for every m >= 1.

    The pair of boolean supports evolves deterministically, so it is
    eventually periodic; iterating until a pair repeats covers every m.
    """
    if P.n != P0.n:
        raise ValidationError("models have different state counts")
    s1, r1 = P.p > 0, P0.p > 0
    s, r = s1.copy(), r1.copy()
    seen = set()
    m = 1
    while True:
        viol = s & ~r
        if viol.any():
            j, i = np.argwhere(viol)[0]
            return ContinuityVerdict(False, (m, int(j), int(i)), m)
        key = (s.tobytes(), r.tobytes())
        if key in seen:
            return ContinuityVerdict(True, None, m - 1)
        seen.add(key)
        s = (s.astype(np.int64) @ s1.astype(np.int64)) > 0
        r = (r.astype(np.int64) @ r1.astype(np.int64)) > 0
        m += 1


def markov_martingale_residual(path: Sequence[int], P: MarkovModel, z: Sequence[float]) -> np.ndarray:
    """M_n = z[x_n] - z[x_0] - sum_{m=1}^n ((Pz)[x_{m-1}] - z[x_{m-1}])."""
    z = np.asarray(z, dtype=float)
    if z.shape != (P.n,) or not np.all(np.isfinite(z)):
        raise ValidationError("z must be a finite vector with one entry per state")
    x = _check_path(path, P.n)
    drift = P.p @ z - z
    comp = np.concatenate(([0.0], np.cumsum(drift[x[:-1]])))
    return z[x] - z[x[0]] - comp


class MarkovFit(NamedTuple):
    model: MarkovModel
    undetermined: tuple  # rows with no observed outgoing transition (filled uniform)
    counts: np.ndarray


def fit_markov(paths: Sequence[Sequence[int]], n: int) -> MarkovFit:
    """Empirical transition frequencies and initial-state frequencies."""
    if len(paths) == 0:
        raise ValidationError("no paths to fit")
    counts = np.zeros((n, n))
    starts = np.zeros(n)
    for path in paths:
        x = _check_path(path, n)
        starts[x[0]] += 1
        np.add.at(counts, (x[:-1], x[1:]), 1)
    rows = counts.sum(axis=1)
    empty = rows == 0
    p = np.where(empty[:, None], 1.0 / n, counts / np.where(empty, 1, rows)[:, None])
    return MarkovFit(MarkovModel(p, starts / starts.sum()), tuple(np.flatnonzero(empty).tolist()), counts)


def simulate_markov(model: MarkovModel, n_steps: int, stream: RandomStream) -> np.ndarray:
    """x_0 ~ v0, then x_{m+1} ~ P[x_m]; returns n_steps + 1 states."""
    return _simulate(model, n_steps, stream.generator())


def _simulate(model: MarkovModel, n_steps: int, gen: np.random.Generator) -> np.ndarray:
    if n_steps < 0:
        raise ValidationError("n_steps must be >= 0")
    u = gen.random(n_steps + 1)
    cdf = np.cumsum(model.p, axis=1)
    cdf[:, -1] = 1.0
    v_cdf = np.cumsum(model.v0)
    v_cdf[-1] = 1.0
    x = np.empty(n_steps + 1, dtype=np.int64)
    x[0] = np.searchsorted(v_cdf, u[0], side="right")
    for m in range(n_steps):
        x[m + 1] = np.searchsorted(cdf[x[m]], u[m + 1], side="right")
    return x


def simulate_markov_ensemble(model: MarkovModel, n_steps: int, n_paths: int, seed: int) -> np.ndarray:
    """Array of shape (n_paths, n_steps + 1); row i uses stream index i."""
    factory = _StreamFactory(seed)
    return np.stack([_simulate(model, n_steps, factory.generator(i)) for i in range(n_paths)])
