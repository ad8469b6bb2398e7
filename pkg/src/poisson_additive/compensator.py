"""Compensators (mean intensities) and empirical martingale checks."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .core import (
    CompensatorPath,
    ConstantRate,
    DomainError,
    EventSequence,
    Exponential,
    HazardInconsistencyError,
    HazardSpec,
    HawkesConst,
    HawkesExp,
    IntensityModel,
    OneShot,
    RandomStream,
    ValidationError,
    intensity_at,
)
from .simulate import _run_thinning, simulate_ensemble

Z_THRESHOLD = 3.0


# ---------------------------------------------------------------------------
# construction


def _segment_kind(law) -> str:
    if isinstance(law, Exponential):
        return "linear"
    if law.total_mass == 0 or not law.continuous:
        return "constant"
    return "curve"


def ihf_compensator(spec: HazardSpec, events: EventSequence) -> CompensatorPath:
    """Integrated hazard compensator.

    On ``(T_n, T_{n+1}]`` the path grows by the cumulative hazard of ``F_n``
    evaluated at ``t - T_n``; the last segment runs to the horizon.
    """
    starts = np.concatenate(([0.0], events.times))
    ends = np.concatenate((events.times, [events.horizon]))
    laws = [spec.law(n) for n in range(starts.size)]
    cum = np.zeros(starts.size + 1)
    for n, (law, lo, hi) in enumerate(zip(laws, starts, ends)):
        span = hi - lo
        observed = n < events.times.size
        if span > law.certain_by:
            raise HazardInconsistencyError(
                f"waiting time {n}: hazard diverges at {law.certain_by} before the "
                f"{'observed wait' if observed else 'horizon'} {span}"
            )
        if observed and law.cdf(span) <= 0:
            raise HazardInconsistencyError(f"waiting time {n}: event observed where F_{n} has no mass")
        inc = law.cumulative_hazard(span)
        if not math.isfinite(inc):
            raise HazardInconsistencyError(f"waiting time {n}: hazard diverges before {span}")
        cum[n + 1] = cum[n] + inc

    bps, kinds = [0.0], []
    for n, (law, lo, hi) in enumerate(zip(laws, starts, ends)):
        kind = _segment_kind(law)
        for c, _ in law.atoms:
            if 0 < c < hi - lo:
                bps.append(lo + c)
                kinds.append(kind)
        if hi > bps[-1]:
            bps.append(hi)
            kinds.append(kind)
    bps = np.array(bps)

    times = events.times

    def exact(t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        n = np.searchsorted(times, ts, side="left")
        out = np.array([cum[k] + laws[k].cumulative_hazard(tk - starts[k]) for tk, k in zip(ts, n)])
        return out.reshape(np.shape(t))

    return CompensatorPath(bps, exact(bps), tuple(kinds), exact=exact)


def _model_segment_kinds(model: IntensityModel, bps: np.ndarray, times: np.ndarray) -> tuple:
    if isinstance(model, ConstantRate):
        return ("linear",) * (bps.size - 1)
    if isinstance(model, OneShot):
        stop = times[0] if times.size else np.inf
        return tuple("linear" if lo < stop else "constant" for lo in bps[:-1])
    base = model if not isinstance(model, (HawkesConst, HawkesExp)) else model.baseline
    curved = (base.b > 0 and base.c > 0) or isinstance(model, HawkesExp) and model.alpha > 0 and times.size
    return ("curve" if curved else "linear",) * (bps.size - 1)


def model_compensator(model: IntensityModel, events: EventSequence, h: Optional[float] = None) -> CompensatorPath:
    """A(t) = int_0^t lambda(s) ds in closed form.

    Breakpoints are 0, the event times and the horizon, plus multiples of
    ``h`` when given; the grid only affects what gets reported.
    """
    pts = [np.array([0.0, events.horizon]), events.times]
    if h is not None:
        if not h > 0:
            raise ValidationError("grid step must be > 0")
        pts.append(np.arange(0.0, events.horizon, h))
    bps = np.unique(np.concatenate(pts))
    times = events.times

    def exact(t):
        return model.cumulative(times, t)

    return CompensatorPath(bps, np.asarray(exact(bps), dtype=float), _model_segment_kinds(model, bps, times), exact)


# ---------------------------------------------------------------------------
# estimators


def dyadic_approximation(model: IntensityModel, events: EventSequence, t: float, level: int) -> float:
    """Sum over 2**level cells of the one-step conditional mean increment,
    approximated by the intensity just after each left dyadic point."""
    if level < 0:
        raise ValidationError("level must be >= 0")
    if not (0 <= t <= events.horizon):
        raise DomainError(f"t={t} outside [0, {events.horizon}]")
    cells = 1 << level
    dt = t / cells
    return math.fsum(intensity_at(model, events, k * dt, right=True) * dt for k in range(cells))


class RateEstimate(NamedTuple):
    rate: float
    stderr: float
    n_mc: int


def instantaneous_rate_estimate(
    model: IntensityModel,
    history: EventSequence,
    t: float,
    h: float,
    n_mc: int,
    stream: RandomStream,
) -> RateEstimate:
    """Monte Carlo P(at least one event in (t, t+h] | history up to t) / h."""
    if not h > 0:
        raise ValidationError("h must be > 0")
    if n_mc < 1:
        raise ValidationError("n_mc must be >= 1")
    if not (0 <= t <= history.horizon):
        raise DomainError(f"t={t} outside [0, {history.horizon}]")
    past = history.times[: history.count(t)]
    excite = 0.0
    if isinstance(model, HawkesExp) and past.size:
        excite = float(model.alpha * np.exp(-model.beta * (t - past)).sum())
    gen = stream.generator()
    hits = 0
    for _ in range(n_mc):
        first, _ = _run_thinning(model, gen, t, t + h, past.size, excite, max_events=1)
        hits += first.size
    p = hits / n_mc
    return RateEstimate(p / h, math.sqrt(p * (1 - p) / n_mc) / h, n_mc)


# ---------------------------------------------------------------------------
# martingale residual tests


@dataclass(frozen=True)
class Probe:
    """History functional g(path up to s) used to weight residual increments."""

    name: str
    fn: Callable = field(compare=False)

    def __call__(self, seq: EventSequence, s: float) -> float:
        return float(self.fn(seq, s))


def constant_probe() -> Probe:
    return Probe("1", lambda seq, s: 1.0)


def count_equals(k: int) -> Probe:
    return Probe(f"1(N_s = {k})", lambda seq, s: float(seq.count(s) == k))


def count_at_least(k: int) -> Probe:
    return Probe(f"1(N_s >= {k})", lambda seq, s: float(seq.count(s) >= k))


DEFAULT_PROBES = (constant_probe(), count_equals(0), count_at_least(1))


@dataclass
class ProbeResult:
    probe: str
    s: float
    t: float
    mean: float
    stderr: float
    z: float
    n: int
    skipped: bool
    passed: bool


@dataclass
class MartingaleTestReport:
    results: list
    n_paths: int
    seeds: list = field(default_factory=list)
    threshold: float = Z_THRESHOLD

    @property
    def passed(self) -> bool:
        evaluated = [r for r in self.results if not r.skipped]
        return bool(evaluated) and all(r.passed for r in evaluated)

    @property
    def max_abs_z(self) -> float:
        zs = [abs(r.z) for r in self.results if not r.skipped]
        return max(zs) if zs else 0.0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "threshold": self.threshold,
            "n_paths": self.n_paths,
            "seeds": list(self.seeds),
            "probes": [asdict(r) for r in self.results],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _evaluator(compensator) -> Callable:
    """Normalize the accepted compensator forms to f(seq, ts) -> A(ts)."""
    if isinstance(compensator, HazardSpec):
        return lambda seq, ts: np.asarray(ihf_compensator(compensator, seq)(ts))
    if isinstance(compensator, CompensatorPath):
        return lambda seq, ts: np.asarray(compensator(ts))
    if hasattr(compensator, "cumulative") and hasattr(compensator, "kernel_params"):
        return lambda seq, ts: np.asarray(compensator.cumulative(seq.times, ts))
    if callable(compensator):
        def f(seq, ts):
            path = compensator(seq)
            return np.asarray(path(ts))
        return f
    raise ValidationError(f"cannot interpret {type(compensator).__name__} as a compensator")


def _zscore(x: np.ndarray) -> tuple:
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
    if se == 0:
        z = 0.0 if mean == 0 else math.copysign(math.inf, mean)
    else:
        z = mean / se
    return mean, se, z


def martingale_residual_test(
    ensemble: Sequence[EventSequence],
    compensator,
    pairs: Sequence[tuple],
    probes: Sequence[Probe] = DEFAULT_PROBES,
    seeds: Sequence[int] = (),
    threshold: float = Z_THRESHOLD,
) -> MartingaleTestReport:
    """z-test that E[((N_t - A_t) - (N_s - A_s)) g] = 0 for each probe g.

    ``compensator`` is an intensity model, a hazard spec, one shared
    ``CompensatorPath`` or a callable mapping a path to its compensator.
    """
    if len(ensemble) == 0:
        raise ValidationError("empty ensemble")
    for s, t in pairs:
        if not s < t:
            raise ValidationError(f"need s < t, got ({s}, {t})")
    evaluate = _evaluator(compensator)
    ts = np.array([x for pair in pairs for x in pair], dtype=float)
    n = len(ensemble)
    incr = np.empty((n, len(pairs)))
    weights = np.empty((n, len(pairs), len(probes)))
    for i, seq in enumerate(ensemble):
        if ts.max() > seq.horizon:
            raise DomainError(f"t={ts.max()} beyond horizon {seq.horizon} of path {i}")
        resid = seq.count(ts) - evaluate(seq, ts)
        incr[i] = resid[1::2] - resid[0::2]
        for j, (s, _) in enumerate(pairs):
            weights[i, j] = [g(seq, s) for g in probes]
    results = []
    for j, (s, t) in enumerate(pairs):
        for k, g in enumerate(probes):
            w = weights[:, j, k]
            if not np.any(w):
                results.append(ProbeResult(g.name, s, t, 0.0, 0.0, 0.0, n, True, False))
                continue
            mean, se, z = _zscore(incr[:, j] * w)
            results.append(ProbeResult(g.name, s, t, mean, se, z, n, False, abs(z) <= threshold))
    return MartingaleTestReport(results, n, list(seeds), threshold)


class ProjectionCheck(NamedTuple):
    z: float
    dn_mean: float
    da_mean: float
    stderr: float


def predictable_projection_check(
    compensator,
    s: float,
    t: float,
    k: int,
    ensemble: Sequence[EventSequence],
) -> ProjectionCheck:
    """Compare E[int C dN] with E[int C dA] for C_u = 1(s < u <= t) 1(N_s = k)."""
    if len(ensemble) == 0:
        raise ValidationError("empty ensemble")
    if t < s:
        raise ValidationError("need s <= t")
    evaluate = _evaluator(compensator)
    ts = np.array([s, t])
    dn = np.empty(len(ensemble))
    da = np.empty(len(ensemble))
    for i, seq in enumerate(ensemble):
        on = float(seq.count(s) == k)
        dn[i] = on * (seq.count(t) - seq.count(s))
        a_s, a_t = evaluate(seq, ts)
        da[i] = on * (a_t - a_s)
    _, se, z = _zscore(dn - da)
    return ProjectionCheck(z, float(dn.mean()), float(da.mean()), se)


# ---------------------------------------------------------------------------
# anticipative intensity


@dataclass(frozen=True)
class IntensityPath:
    """Piecewise-constant rate: ``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or vals.size != bp.size - 1:
            raise ValidationError("need n+1 breakpoints for n values")
        if bp[0] != 0 or np.any(np.diff(bp) <= 0):
            raise ValidationError("breakpoints must start at 0 and increase strictly")
        if np.any(vals < 0):
            raise ValidationError("rates must be >= 0")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, t):
        ts = np.asarray(t, dtype=float)
        if np.any(ts < 0) or np.any(ts > self.breakpoints[-1]):
            raise DomainError(f"t outside [0, {self.breakpoints[-1]}]")
        k = np.clip(np.searchsorted(self.breakpoints, ts, side="right") - 1, 0, self.values.size - 1)
        out = self.values[k]
        return float(out) if out.ndim == 0 else out

    def integrate(self) -> CompensatorPath:
        cum = np.concatenate(([0.0], np.cumsum(self.values * np.diff(self.breakpoints))))
        return CompensatorPath(self.breakpoints, cum, ("linear",) * self.values.size)


def anticipative_intensity(events: EventSequence, a: float) -> IntensityPath:
    """lambda_t = 1 if an event falls in (t, t+a], else 2, on [0, horizon - a]."""
    if not a > 0:
        raise ValidationError("look-ahead a must be > 0")
    if a >= events.horizon:
        raise DomainError(f"look-ahead a={a} leaves no domain before horizon {events.horizon}")
    end = events.horizon - a
    cand = np.concatenate(([0.0, end], events.times, events.times - a))
    bps = np.unique(cand[(cand >= 0) & (cand <= end)])
    left = bps[:-1]
    ahead = events.count(left + a) - events.count(left)
    return IntensityPath(bps, np.where(ahead > 0, 1.0, 2.0))


@dataclass
class AnticipativityReport:
    a: float
    t: float
    n_paths: int
    drift_mean: float
    drift_stderr: float
    expected_drift: float
    anticipative: MartingaleTestReport
    control: MartingaleTestReport

    @property
    def drift_z(self) -> float:
        return (self.drift_mean - self.expected_drift) / self.drift_stderr

    @property
    def demonstrated(self) -> bool:
        """Anticipative compensator rejected while the control passes."""
        return (not self.anticipative.passed) and self.control.passed

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "t": self.t,
            "n_paths": self.n_paths,
            "drift_mean": self.drift_mean,
            "drift_stderr": self.drift_stderr,
            "expected_drift": self.expected_drift,
            "drift_z": self.drift_z,
            "demonstrated": self.demonstrated,
            "anticipative": self.anticipative.to_dict(),
            "control": self.control.to_dict(),
        }


def anticipativity_report(
    n_paths: int,
    a: float,
    horizon: float,
    seed: int,
    t: Optional[float] = None,
    workers: int = 1,
) -> AnticipativityReport:
    """Score the look-ahead intensity against unit-Poisson paths.

    Under the reference measure E[lambda_s] = 1 + exp(-a), so the residual
    N_t - A_t drifts to -t exp(-a) and the martingale test must fail, while
    the control compensator A_t = t passes.
    """
    if not a > 0:
        raise ValidationError("look-ahead a must be > 0")
    if horizon <= a:
        raise DomainError(f"horizon {horizon} must exceed look-ahead {a}")
    t = horizon - a if t is None else t
    if not (0 < t <= horizon - a):
        raise DomainError(f"t must lie in (0, {horizon - a}]")
    ensemble = simulate_ensemble(ConstantRate(1.0), horizon, n_paths, seed, workers=workers)
    probe = [constant_probe()]

    def look_ahead(seq):
        return anticipative_intensity(seq, a).integrate()

    anticip = martingale_residual_test(ensemble, look_ahead, [(0.0, t)], probe, seeds=[seed])
    control = martingale_residual_test(
        ensemble, CompensatorPath.linear(1.0, horizon), [(0.0, t)], probe, seeds=[seed]
    )
    r = anticip.results[0]
    return AnticipativityReport(a, t, n_paths, r.mean, r.stderr, -t * math.exp(-a), anticip, control)
