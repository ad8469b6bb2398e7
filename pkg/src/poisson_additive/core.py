"""Shared domain types: event sequences, intensity models, compensator paths,
waiting-time laws and reproducible random streams.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared between threads without coordination.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np


class ValidationError(ValueError):
    """Malformed input (bad parameters, unsorted times, broken files)."""


class DomainError(ValidationError):
    """Evaluation requested outside the domain of a path or model."""


class NumericFailure(ArithmeticError):
    """A computation is well-posed but has no finite answer."""


class ExplosionError(NumericFailure):
    pass


class HazardInconsistencyError(NumericFailure):
    pass


MAX_EVENTS = 10_000_000


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# random streams


_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomStream:
    """Counter-based stream keyed by ``(seed, index)``.

    Philox is keyed with the two 64-bit words ``[seed, index]`` and starts from
    a zero counter, so every (seed, index) pair names one fixed, platform
    independent sequence and distinct indices never overlap.
    """

    seed: int
    index: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.index <= _MASK64):
            raise ValidationError("seed and index must be 64-bit unsigned integers")

    @property
    def key(self) -> int:
        return self.seed | (self.index << 64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key))

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, index)


class _StreamFactory:
    """Re-keys one Philox instance in place; much cheaper than building a new
    generator per path when running large ensembles."""

    def __init__(self, seed: int):
        self.seed = seed
        self._bg = np.random.Philox(key=0)
        self._gen = np.random.Generator(self._bg)

    def generator(self, index: int) -> np.random.Generator:
        self._bg.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.zeros(4, dtype=np.uint64),
                "key": np.array([self.seed, index], dtype=np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class EventSequence:
    """Strictly increasing arrival times observed on ``(0, horizon]``."""

    horizon: float
    times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        horizon = float(self.horizon)
        if not (horizon > 0 and math.isfinite(horizon)):
            raise ValidationError(f"horizon must be positive and finite, got {self.horizon}")
        times = np.asarray(self.times, dtype=float).ravel()
        if times.size:
            if not np.all(np.isfinite(times)):
                raise ValidationError("event times must be finite")
            if times[0] <= 0 or times[-1] > horizon:
                raise ValidationError("event times must lie in (0, horizon]")
            if np.any(np.diff(times) <= 0):
                raise ValidationError("event times must be strictly increasing")
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "times", _frozen(times))

    def __len__(self) -> int:
        return self.times.size

    def count(self, t):
        """Right-continuous counting process N(t)."""
        return np.searchsorted(self.times, t, side="right")

    def count_before(self, t):
        """Left limit N(t-)."""
        return np.searchsorted(self.times, t, side="left")

    @property
    def waits(self) -> np.ndarray:
        return np.diff(self.times, prepend=0.0)

    def restrict(self, horizon: float) -> "EventSequence":
        return EventSequence(horizon, self.times[: self.count(horizon)])


# ---------------------------------------------------------------------------
# intensity models
#
# Every variant is non-increasing in t between events, which the thinning
# sampler relies on. ``code``/``kernel_params`` feed the compiled sampler.


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (math.isfinite(v) and v >= 0):
            raise ValidationError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class ConstantRate:
    rate: float

    kind = "constant"
    code = 0

    def __post_init__(self):
        _check_nonneg(rate=self.rate)

    def intensity(self, past: np.ndarray, t: float) -> float:
        return self.rate

    def cumulative(self, times: np.ndarray, t):
        return self.rate * np.asarray(t, dtype=float)

    def kernel_params(self) -> np.ndarray:
        return np.array([self.rate, 0.0, 0.0, 0.0, 0.0])

    def params(self) -> dict:
        return {"rate": self.rate}


@dataclass(frozen=True)
class DeterministicBaseline:
    """mu(t) = a + b exp(-c t)."""

    a: float
    b: float = 0.0
    c: float = 0.0

    kind = "baseline"
    code = 1

    def __post_init__(self):
        _check_nonneg(a=self.a, b=self.b, c=self.c)

    def mu(self, t):
        return self.a + self.b * np.exp(-self.c * np.asarray(t, dtype=float))

    def mu_integral(self, t):
        t = np.asarray(t, dtype=float)
        if self.c == 0:
            return (self.a + self.b) * t
        return self.a * t - (self.b / self.c) * np.expm1(-self.c * t)

    def intensity(self, past: np.ndarray, t: float) -> float:
        return float(self.mu(t))

    def cumulative(self, times: np.ndarray, t):
        return self.mu_integral(t)

    def kernel_params(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, 0.0, 0.0])

    def params(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class HawkesConst:
    """mu(t) + phi0 * N(t-); the excitation never decays."""

    baseline: DeterministicBaseline
    phi0: float

    kind = "hawkes_const"
    code = 2

    def __post_init__(self):
        _check_nonneg(phi0=self.phi0)

    def intensity(self, past: np.ndarray, t: float) -> float:
        return float(self.baseline.mu(t)) + self.phi0 * len(past)

    def cumulative(self, times: np.ndarray, t):
        t = np.asarray(t, dtype=float)
        ts = np.atleast_1d(t)
        # sum_{T_i < t} (t - T_i) via prefix sums
        k = np.searchsorted(times, ts, side="left")
        csum = np.concatenate(([0.0], np.cumsum(times)))
        excite = self.phi0 * (k * ts - csum[k])
        out = self.baseline.mu_integral(ts) + excite
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def kernel_params(self) -> np.ndarray:
        b = self.baseline
        return np.array([b.a, b.b, b.c, self.phi0, 0.0])

    def params(self) -> dict:
        return {**self.baseline.params(), "phi0": self.phi0}


@dataclass(frozen=True)
class HawkesExp:
    """mu(t) + sum_{T_i < t} alpha exp(-beta (t - T_i))."""

    baseline: DeterministicBaseline
    alpha: float
    beta: float

    kind = "hawkes_exp"
    code = 3

    def __post_init__(self):
        _check_nonneg(alpha=self.alpha)
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValidationError(f"beta must be > 0, got {self.beta}")

    def intensity(self, past: np.ndarray, t: float) -> float:
        past = np.asarray(past, dtype=float)
        excite = self.alpha * np.exp(-self.beta * (t - past)).sum() if past.size else 0.0
        return float(self.baseline.mu(t)) + float(excite)

    def cumulative(self, times: np.ndarray, t):
        t = np.asarray(t, dtype=float)
        ts = np.atleast_1d(t)
        excite = np.zeros_like(ts)
        if times.size:
            lag = ts[:, None] - times[None, :]
            terms = -np.expm1(-self.beta * np.where(lag > 0, lag, 0.0))
            excite = (self.alpha / self.beta) * terms.sum(axis=1)
        out = self.baseline.mu_integral(ts) + excite
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def kernel_params(self) -> np.ndarray:
        b = self.baseline
        return np.array([b.a, b.b, b.c, self.alpha, self.beta])

    def params(self) -> dict:
        return {**self.baseline.params(), "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class OneShot:
    """Hazard ``rate`` until the first event, zero afterwards."""

    rate: float

    kind = "one_shot"
    code = 4

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValidationError(f"rate must be > 0, got {self.rate}")

    def intensity(self, past: np.ndarray, t: float) -> float:
        return self.rate if len(past) == 0 else 0.0

    def cumulative(self, times: np.ndarray, t):
        t = np.asarray(t, dtype=float)
        stop = times[0] if times.size else np.inf
        out = self.rate * np.minimum(t, stop)
        return out if t.ndim else float(out)

    def kernel_params(self) -> np.ndarray:
        return np.array([self.rate, 0.0, 0.0, 0.0, 0.0])

    def params(self) -> dict:
        return {"rate": self.rate}


IntensityModel = Union[ConstantRate, DeterministicBaseline, HawkesConst, HawkesExp, OneShot]

MODEL_PARAMS = {
    "constant": ("rate",),
    "baseline": ("a", "b", "c"),
    "hawkes_const": ("a", "b", "c", "phi0"),
    "hawkes_exp": ("a", "b", "c", "alpha", "beta"),
    "one_shot": ("rate",),
}


def make_model(kind: str, params: dict) -> IntensityModel:
    """Build a model from its family tag and a flat parameter dict."""
    if kind not in MODEL_PARAMS:
        raise ValidationError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_PARAMS)}")
    names = MODEL_PARAMS[kind]
    unknown = set(params) - set(names)
    if unknown:
        raise ValidationError(f"unknown parameter(s) {sorted(unknown)} for kind {kind!r}")
    try:
        p = {k: float(v) for k, v in params.items()}
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"non-numeric parameter for kind {kind!r}: {exc}") from None
    if kind in ("constant", "one_shot"):
        if "rate" not in p:
            raise ValidationError(f"missing parameter 'rate' for kind {kind!r}")
        return ConstantRate(p["rate"]) if kind == "constant" else OneShot(p["rate"])
    if "a" not in p:
        raise ValidationError(f"missing parameter 'a' for kind {kind!r}")
    base = DeterministicBaseline(p["a"], p.get("b", 0.0), p.get("c", 0.0))
    if kind == "baseline":
        return base
    if kind == "hawkes_const":
        if "phi0" not in p:
            raise ValidationError("missing parameter 'phi0' for kind 'hawkes_const'")
        return HawkesConst(base, p["phi0"])
    for name in ("alpha", "beta"):
        if name not in p:
            raise ValidationError(f"missing parameter {name!r} for kind 'hawkes_exp'")
    return HawkesExp(base, p["alpha"], p["beta"])


def model_to_dict(model: IntensityModel) -> dict:
    return {"kind": model.kind, "params": model.params()}


def intensity_at(model: IntensityModel, history: EventSequence, t: float, right: bool = False) -> float:
    """Conditional intensity at ``t`` from events strictly before ``t``.

    ``right=True`` gives the value at ``t+`` (events at ``t`` included).
    """
    if not (0 <= t <= history.horizon):
        raise DomainError(f"t={t} outside [0, {history.horizon}]")
    k = history.count(t) if right else history.count_before(t)
    return model.intensity(history.times[:k], t)


# ---------------------------------------------------------------------------
# compensator paths


SEGMENT_KINDS = ("linear", "constant", "curve")


@dataclass(frozen=True)
class CompensatorPath:
    """Non-decreasing A(t) on ``[0, breakpoints[-1]]``.

    Between breakpoints a segment is ``linear`` (interpolated), ``constant``
    (flat at the left value, jump at the right end) or ``curve``. Paths built
    from a closed form carry ``exact``, which is then used for every
    evaluation; the breakpoint table is what gets serialized.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    kinds: tuple = ()
    exact: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size < 1 or bp.shape != vals.shape:
            raise ValidationError("breakpoints and values must be equal-length 1-d arrays")
        if bp[0] != 0:
            raise ValidationError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValidationError("breakpoints must be strictly increasing")
        if vals[0] != 0:
            raise ValidationError("compensator must start at 0")
        if np.any(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[1:]))):
            raise ValidationError("compensator values must be non-decreasing")
        kinds = tuple(self.kinds) if self.kinds else ("linear",) * (bp.size - 1)
        if len(kinds) != bp.size - 1 or any(k not in SEGMENT_KINDS for k in kinds):
            raise ValidationError("one segment kind (linear|constant|curve) per interval required")
        if "curve" in kinds and self.exact is None:
            raise ValidationError("curved segments need an exact evaluator")
        object.__setattr__(self, "breakpoints", _frozen(bp))
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "kinds", kinds)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    def __call__(self, t):
        return compensator_eval(self, t)

    @classmethod
    def linear(cls, slope: float, horizon: float) -> "CompensatorPath":
        return cls(
            np.array([0.0, horizon]),
            np.array([0.0, slope * horizon]),
            ("linear",),
            exact=lambda t: slope * np.asarray(t, dtype=float),
        )

    def scaled(self, factor: float) -> "CompensatorPath":
        exact = None
        if self.exact is not None:
            inner = self.exact
            exact = lambda t: factor * inner(t)  # noqa: E731
        return CompensatorPath(self.breakpoints, factor * self.values, self.kinds, exact)


def compensator_eval(path: CompensatorPath, t):
    """Evaluate A(t); accepts scalars or arrays."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0) or np.any(ts > path.breakpoints[-1]) or np.any(np.isnan(ts)):
        raise DomainError(f"t outside [0, {path.breakpoints[-1]}]")
    if path.exact is not None:
        out = np.asarray(path.exact(ts), dtype=float)
    else:
        bp, vals = path.breakpoints, path.values
        if bp.size == 1:
            out = np.zeros_like(ts)
        else:
            k = np.clip(np.searchsorted(bp, ts, side="right") - 1, 0, bp.size - 2)
            w = (ts - bp[k]) / (bp[k + 1] - bp[k])
            linear = vals[k] + w * (vals[k + 1] - vals[k])
            flat = np.array([kind == "constant" for kind in path.kinds])[k]
            out = np.where(flat, vals[k], linear)
            out = np.where(ts == bp[-1], vals[-1], out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# waiting-time laws


class WaitingTimeLaw:
    """Sub-probability law of a waiting time on (0, inf).

    Mass missing from ``total_mass`` means "no further event".
    """

    total_mass: float = 1.0
    atoms: tuple = ()
    continuous: bool = True

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        return self.cdf(x) - sum(p for c, p in self.atoms if c == x)

    def quantile(self, u: float) -> float:
        """Generalized inverse inf{x : F(x) >= u} for u < total_mass."""
        raise NotImplementedError

    @property
    def certain_by(self) -> float:
        """Smallest x with F(x) = 1 (inf for defective laws)."""
        raise NotImplementedError

    def sample(self, u: float) -> Optional[float]:
        if u >= self.total_mass:
            return None
        return self.quantile(u)

    def cumulative_hazard(self, x: float) -> float:
        """int_0^x F(du) / (1 - F(u-)); inf once the hazard has diverged."""
        if x < 0:
            return 0.0
        total, surv_a, a = 0.0, 1.0, 0.0
        for c, p in self.atoms:
            if c > x:
                break
            surv_c = 1.0 - self.cdf_left(c)
            if surv_c <= 0:
                return math.inf
            total += -math.log(surv_c / surv_a) + p / surv_c
            surv_a, a = 1.0 - self.cdf(c), c
        if x == a and a > 0:
            return total
        surv_x = 1.0 - self.cdf(x)
        if surv_x <= 0:
            return math.inf
        return total - math.log(surv_x / surv_a)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(WaitingTimeLaw):
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValidationError(f"exponential rate must be > 0, got {self.rate}")

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0 else 0.0

    def quantile(self, u):
        return -math.log1p(-u) / self.rate

    @property
    def certain_by(self):
        return math.inf

    def cumulative_hazard(self, x):
        return self.rate * x if x > 0 else 0.0

    def to_dict(self):
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class PiecewiseCdf(WaitingTimeLaw):
    """Continuous CDF interpolated linearly through ``(knots, values)``;
    flat at ``values[-1]`` past the last knot."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.size < 2 or k.shape != v.shape:
            raise ValidationError("piecewise CDF needs >= 2 knots with matching values")
        if k[0] < 0 or np.any(np.diff(k) <= 0):
            raise ValidationError("CDF knots must be >= 0 and strictly increasing")
        if v[0] != 0 or np.any(np.diff(v) < 0) or v[-1] > 1 or not np.all(np.isfinite(v)):
            raise ValidationError("CDF values must start at 0, be non-decreasing and stay <= 1")
        object.__setattr__(self, "knots", tuple(k.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @property
    def total_mass(self):
        return self.values[-1]

    def cdf(self, x):
        return float(np.interp(x, self.knots, self.values, left=0.0, right=self.values[-1]))

    def quantile(self, u):
        v = self.values
        k = int(np.searchsorted(v, u, side="left"))
        if k == 0:
            return self.knots[0]
        w = (u - v[k - 1]) / (v[k] - v[k - 1])
        return self.knots[k - 1] + w * (self.knots[k] - self.knots[k - 1])

    @property
    def certain_by(self):
        if self.values[-1] < 1:
            return math.inf
        return self.knots[int(np.searchsorted(self.values, 1.0, side="left"))]

    def to_dict(self):
        return {"kind": "piecewise", "knots": list(self.knots), "values": list(self.values)}


@dataclass(frozen=True)
class PointMass(WaitingTimeLaw):
    x: float
    mass: float = 1.0

    continuous = False

    def __post_init__(self):
        if not (math.isfinite(self.x) and self.x > 0):
            raise ValidationError(f"point mass location must be > 0, got {self.x}")
        if not (0 <= self.mass <= 1):
            raise ValidationError(f"point mass must lie in [0, 1], got {self.mass}")

    @property
    def total_mass(self):
        return self.mass

    @property
    def atoms(self):
        return ((self.x, self.mass),) if self.mass > 0 else ()

    def cdf(self, x):
        return self.mass if x >= self.x else 0.0

    def quantile(self, u):
        return self.x

    @property
    def certain_by(self):
        return self.x if self.mass >= 1 else math.inf

    def to_dict(self):
        return {"kind": "point_mass", "x": self.x, "mass": self.mass}


@dataclass(frozen=True)
class Defective(WaitingTimeLaw):
    """``mass * base``: with probability ``1 - mass`` no further event."""

    mass: float
    base: WaitingTimeLaw = Exponential(1.0)

    def __post_init__(self):
        if not (0 <= self.mass <= 1):
            raise ValidationError(f"defective mass must lie in [0, 1], got {self.mass}")
        if isinstance(self.base, Defective) or abs(self.base.total_mass - 1.0) > 1e-12:
            raise ValidationError("defective base law must be a proper distribution")

    @property
    def total_mass(self):
        return self.mass

    @property
    def continuous(self):
        return self.base.continuous

    @property
    def atoms(self):
        if self.mass == 0:
            return ()
        return tuple((c, self.mass * p) for c, p in self.base.atoms)

    def cdf(self, x):
        return self.mass * self.base.cdf(x)

    def quantile(self, u):
        return self.base.quantile(u / self.mass)

    @property
    def certain_by(self):
        return self.base.certain_by if self.mass >= 1 else math.inf

    def to_dict(self):
        return {"kind": "defective", "mass": self.mass, "base": self.base.to_dict()}


def law_from_dict(d: dict) -> WaitingTimeLaw:
    try:
        kind = d["kind"]
        if kind == "exponential":
            return Exponential(float(d["rate"]))
        if kind == "piecewise":
            return PiecewiseCdf(tuple(d["knots"]), tuple(d["values"]))
        if kind == "point_mass":
            return PointMass(float(d["x"]), float(d.get("mass", 1.0)))
        if kind == "defective":
            base = law_from_dict(d["base"]) if "base" in d else Exponential(1.0)
            return Defective(float(d["mass"]), base)
    except KeyError as exc:
        raise ValidationError(f"waiting-time law is missing field {exc.args[0]!r}") from None
    except (TypeError, AttributeError):
        raise ValidationError(f"malformed waiting-time law {d!r}") from None
    raise ValidationError(f"unknown waiting-time law kind {d.get('kind')!r}")


@dataclass(frozen=True)
class HazardSpec:
    """Conditional waiting-time laws F_0, F_1, ...; the last one repeats."""

    laws: tuple

    def __post_init__(self):
        laws = tuple(self.laws)
        if not laws:
            raise ValidationError("hazard spec needs at least one waiting-time law")
        if not all(isinstance(f, WaitingTimeLaw) for f in laws):
            raise ValidationError("hazard spec entries must be waiting-time laws")
        object.__setattr__(self, "laws", laws)

    def law(self, n: int) -> WaitingTimeLaw:
        return self.laws[min(n, len(self.laws) - 1)]

    def to_dict(self) -> dict:
        return {"laws": [f.to_dict() for f in self.laws]}

    @classmethod
    def from_dict(cls, d: dict) -> "HazardSpec":
        if not isinstance(d, dict) or not isinstance(d.get("laws"), list):
            raise ValidationError("hazard spec JSON needs a 'laws' list")
        return cls(tuple(law_from_dict(x) for x in d["laws"]))


def as_times(seq: Union[EventSequence, Sequence[float]]) -> np.ndarray:
    return seq.times if isinstance(seq, EventSequence) else np.asarray(seq, dtype=float)
