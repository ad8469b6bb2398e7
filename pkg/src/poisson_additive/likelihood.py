"""Log-likelihood ratio against the unit-rate Poisson process, parametric
maximum likelihood, and time-rescaling goodness of fit."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize, stats
from statsmodels.tools.numdiff import approx_hess3

from .core import (
    MODEL_PARAMS,
    CompensatorPath,
    ConstantRate,
    DeterministicBaseline,
    EventSequence,
    HawkesConst,
    HawkesExp,
    IntensityModel,
    NumericFailure,
    OneShot,
    ValidationError,
    make_model,
)


def event_intensities(model: IntensityModel, times: np.ndarray) -> np.ndarray:
    """Left-limit intensities lambda(T_i-) at each event time."""
    times = np.asarray(times, dtype=float)
    if isinstance(model, ConstantRate):
        return np.full(times.size, model.rate)
    if isinstance(model, DeterministicBaseline):
        return model.mu(times)
    if isinstance(model, HawkesConst):
        return model.baseline.mu(times) + model.phi0 * np.arange(times.size)
    if isinstance(model, HawkesExp):
        excite = np.zeros(times.size)
        for i in range(1, times.size):
            excite[i] = math.exp(-model.beta * (times[i] - times[i - 1])) * (excite[i - 1] + model.alpha)
        return model.baseline.mu(times) + excite
    if isinstance(model, OneShot):
        out = np.zeros(times.size)
        out[:1] = model.rate
        return out
    return np.array([model.intensity(times[:i], ti) for i, ti in enumerate(times)])


def log_likelihood_ratio(events: EventSequence, model: IntensityModel, t: Optional[float] = None) -> float:
    """log dP/dP0 on [0, t]: int_0^t (1 - lambda) ds + sum_{T_i <= t} log lambda(T_i-).

    Returns -inf when an observed event has zero intensity.
    """
    t = events.horizon if t is None else float(t)
    if not (0 <= t <= events.horizon):
        raise ValidationError(f"t={t} outside [0, {events.horizon}]")
    times = events.times[: events.count(t)]
    lam = event_intensities(model, times)
    if np.any(lam <= 0):
        return -math.inf
    return t - float(model.cumulative(times, t)) + float(np.log(lam).sum())


# ---------------------------------------------------------------------------
# fitting


DEFAULT_INIT = {"rate": 1.0, "a": 1.0, "b": 0.5, "c": 0.5, "phi0": 0.1, "alpha": 0.5, "beta": 1.0}
FITTABLE = ("constant", "baseline", "hawkes_const", "hawkes_exp")


@dataclass
class FitResult:
    family: str
    params: dict
    loglik: float
    iterations: int
    converged: bool
    init: dict
    init_loglik: float
    stderr: dict = field(default_factory=dict)
    boundary: tuple = ()
    history: list = field(default_factory=list)
    message: str = ""

    def model(self) -> IntensityModel:
        return make_model(self.family, self.params)


def _observed_stderr(loglik, x: np.ndarray) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hess = approx_hess3(x, loglik)
            cov = np.linalg.inv(-hess)
        var = np.diag(cov)
    except (ValidationError, np.linalg.LinAlgError):
        return np.full(x.size, np.nan)
    return np.where((var > 0) & np.isfinite(var), np.sqrt(np.abs(var)), np.nan)


def fit_mle(
    events: EventSequence,
    family: str,
    init: Optional[dict] = None,
    fixed: Optional[dict] = None,
    max_iter: int = 20_000,
    xatol: float = 1e-8,
    fatol: float = 1e-8,
    boundary_tol: float = 1e-6,
) -> FitResult:
    """Maximize the log-likelihood ratio over the family's free parameters.

    Free parameters are searched as logs (Nelder-Mead), which keeps them
    positive; ``fixed`` pins the others. A parameter that ends below
    ``boundary_tol`` is reported in ``boundary``.
    """
    if family not in FITTABLE:
        raise ValidationError(f"cannot fit family {family!r}; expected one of {FITTABLE}")
    names = MODEL_PARAMS[family]
    fixed = dict(fixed or {})
    unknown = (set(fixed) | set(init or {})) - set(names)
    if unknown:
        raise ValidationError(f"unknown parameter(s) {sorted(unknown)} for family {family!r}")
    free = [n for n in names if n not in fixed]
    if not free:
        raise ValidationError("no free parameters to fit")
    start = {n: float((init or {}).get(n, DEFAULT_INIT[n])) for n in free}
    if any(not (v > 0 and math.isfinite(v)) for v in start.values()):
        raise ValidationError("free parameters need finite positive initial values")

    def build(values) -> IntensityModel:
        return make_model(family, {**fixed, **dict(zip(free, values))})

    def loglik(values) -> float:
        try:
            return log_likelihood_ratio(events, build(values))
        except ValidationError:
            return -math.inf

    x0 = np.log([start[n] for n in free])
    init_ll = loglik(np.exp(x0))
    if not math.isfinite(init_ll):
        raise NumericFailure(f"log-likelihood is not finite at the initial point {start}")

    def objective(x):
        ll = loglik(np.exp(x))
        return -ll if math.isfinite(ll) else math.inf

    history = [init_ll]

    def record(intermediate_result):
        history.append(-float(intermediate_result.fun))

    res = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        callback=record,
        options={"xatol": xatol, "fatol": fatol, "maxiter": max_iter, "maxfev": 10 * max_iter},
    )
    best = np.exp(res.x)
    se = _observed_stderr(loglik, best)
    params = {**fixed, **dict(zip(free, best.tolist()))}
    params = {n: params[n] for n in names}
    return FitResult(
        family=family,
        params=params,
        loglik=-float(res.fun),
        iterations=int(res.nit),
        converged=bool(res.success),
        init={**fixed, **start},
        init_loglik=init_ll,
        stderr=dict(zip(free, se.tolist())),
        boundary=tuple(n for n, v in zip(free, best) if v < boundary_tol),
        history=history,
        message=str(res.message),
    )


# ---------------------------------------------------------------------------
# time rescaling


def time_rescale(events: EventSequence, A: CompensatorPath) -> EventSequence:
    """Map T_i to A(T_i); a unit Poisson sequence under the true compensator."""
    if A.horizon < events.horizon:
        raise ValidationError(f"compensator ends at {A.horizon}, before horizon {events.horizon}")
    tau = np.atleast_1d(np.asarray(A(events.times), dtype=float)) if len(events) else np.empty(0)
    end = float(A(events.horizon))
    if tau.size and (tau[0] <= 0 or np.any(np.diff(tau) <= 0)):
        raise ValidationError("compensator is flat across consecutive events; rescaled times would collide")
    if end <= 0:
        raise ValidationError("compensator is zero on the whole horizon")
    return EventSequence(end, tau)


class KSResult(NamedTuple):
    stat: float
    threshold: float
    passed: bool
    n: int
    pvalue: float


KS_CRITICAL_1PCT = 1.628


def gof_exp1(waits: Sequence[float]) -> KSResult:
    """One-sample KS against Exp(1); pass iff stat < 1.628 / sqrt(n)."""
    w = np.asarray(waits, dtype=float).ravel()
    if w.size == 0:
        raise ValidationError("no waiting times to test")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("waiting times must be finite and > 0")
    res = stats.kstest(w, "expon")
    threshold = KS_CRITICAL_1PCT / math.sqrt(w.size)
    return KSResult(float(res.statistic), threshold, bool(res.statistic < threshold), int(w.size), float(res.pvalue))


def rescaled_waits(events: EventSequence, A: CompensatorPath) -> np.ndarray:
    return time_rescale(events, A).waits


def gof_report(events: EventSequence, A: CompensatorPath) -> KSResult:
    return gof_exp1(rescaled_waits(events, A))
