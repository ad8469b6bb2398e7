"""Exact samplers for counting processes.

Thinning handles the parametric intensity models; waiting-time inversion
handles hazard specs. Each path draws from its own ``RandomStream``, so an
ensemble is reproducible under any scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

import numpy as np
from numba import njit

from .core import (
    MAX_EVENTS,
    EventSequence,
    ExplosionError,
    HazardSpec,
    IntensityModel,
    RandomStream,
    ValidationError,
    _StreamFactory,
)

_DONE, _NEED_UNIFORMS, _FULL = 0, 1, 2


@njit(cache=True, nogil=True)
def _thin_kernel(code, p, t, horizon, n, excite, u, pos, out, nout, limit):
    """Advance a thinning sampler until the horizon, the end of the uniform
    buffer, or ``limit`` stored events. The bound at each proposal is the
    intensity at the current time, valid because every model is
    non-increasing between events."""
    a, b, c, q1, q2 = p[0], p[1], p[2], p[3], p[4]
    while True:
        if code == 4 and n > 0:
            return _DONE, t, n, excite, pos, nout
        lam_bar = a + b * math.exp(-c * t)
        if code == 2:
            lam_bar += q1 * n
        elif code == 3:
            lam_bar += excite
        if lam_bar <= 0.0:
            return _DONE, t, n, excite, pos, nout
        if pos + 2 > u.size:
            return _NEED_UNIFORMS, t, n, excite, pos, nout
        w = -math.log1p(-u[pos]) / lam_bar
        t_new = t + w
        if t_new > horizon:
            return _DONE, horizon, n, excite, pos + 2, nout
        lam_new = a + b * math.exp(-c * t_new)
        if code == 2:
            lam_new += q1 * n
        elif code == 3:
            excite = excite * math.exp(-q2 * w)
            lam_new += excite
        accept = u[pos + 1] * lam_bar <= lam_new
        pos += 2
        t = t_new
        if accept:
            out[nout] = t
            nout += 1
            n += 1
            if code == 3:
                excite += q1
            if nout >= limit:
                return _FULL, t, n, excite, pos, nout


def _run_thinning(
    model: IntensityModel,
    gen: np.random.Generator,
    t0: float,
    horizon: float,
    n0: int = 0,
    excite0: float = 0.0,
    max_events: Optional[int] = None,
):
    """Drive the kernel from state ``(t0, n0, excite0)``; returns (times, truncated)."""
    code = model.code
    params = model.kernel_params()
    cap_total = MAX_EVENTS + 1 if max_events is None else min(max_events, MAX_EVENTS + 1)
    out = np.empty(min(64, cap_total))
    u = np.empty(0)
    block = 64
    t, n, excite, pos, nout = float(t0), int(n0), float(excite0), 0, 0
    while True:
        status, t, n, excite, pos, nout = _thin_kernel(
            code, params, t, horizon, n, excite, u, pos, out, nout, min(out.size, cap_total)
        )
        if status == _DONE:
            return out[:nout], False
        if status == _NEED_UNIFORMS:
            u = np.concatenate((u[pos:], gen.random(block)))
            pos = 0
            block = min(2 * block, 1 << 20)
            continue
        if nout > MAX_EVENTS:
            raise ExplosionError(f"more than {MAX_EVENTS} events before t={horizon}; check parameters")
        if nout >= cap_total:
            return out[:nout], True
        out = np.concatenate((out, np.empty(min(out.size, cap_total - out.size))))


def simulate_thinning(
    model: IntensityModel,
    horizon: float,
    stream: RandomStream,
    max_events: Optional[int] = None,
) -> EventSequence:
    """Ogata-style thinning on ``(0, horizon]``.

    With ``max_events`` the path stops at that many events; the returned
    sequence then ends at the stopping time of the last event.
    """
    return _simulate_model(model, horizon, stream.generator(), max_events)


def _simulate_model(model, horizon, gen, max_events=None) -> EventSequence:
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValidationError(f"horizon must be positive and finite, got {horizon}")
    times, truncated = _run_thinning(model, gen, 0.0, float(horizon), max_events=max_events)
    if truncated and times.size:
        return EventSequence(float(times[-1]), times)
    return EventSequence(horizon, times)


def simulate_from_hazard(spec: HazardSpec, horizon: float, stream: RandomStream) -> EventSequence:
    """Successive waiting times drawn by generalized inverse CDF."""
    return _simulate_hazard(spec, horizon, stream.generator())


def _simulate_hazard(spec: HazardSpec, horizon, gen) -> EventSequence:
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValidationError(f"horizon must be positive and finite, got {horizon}")
    times = []
    t = 0.0
    while True:
        wait = spec.law(len(times)).sample(gen.random())
        if wait is None:
            break
        t += wait
        if t > horizon:
            break
        times.append(t)
        if len(times) > MAX_EVENTS:
            raise ExplosionError(f"more than {MAX_EVENTS} events before t={horizon}")
    return EventSequence(horizon, times)


def simulate_ensemble(
    source: Union[IntensityModel, HazardSpec],
    horizon: float,
    n_paths: int,
    seed: int,
    workers: int = 1,
    max_events: Optional[int] = None,
) -> list:
    """Simulate ``n_paths`` paths; path ``i`` uses ``RandomStream(seed, i)``."""
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    RandomStream(seed)  # range check

    def run(lo, hi):
        factory = _StreamFactory(seed)
        if isinstance(source, HazardSpec):
            return [_simulate_hazard(source, horizon, factory.generator(i)) for i in range(lo, hi)]
        return [_simulate_model(source, horizon, factory.generator(i), max_events) for i in range(lo, hi)]

    if workers <= 1 or n_paths < 2 * workers:
        return run(0, n_paths)
    edges = np.linspace(0, n_paths, workers + 1).astype(int)
    with ThreadPoolExecutor(workers) as pool:
        chunks = pool.map(run, edges[:-1], edges[1:])
    return [seq for chunk in chunks for seq in chunk]
