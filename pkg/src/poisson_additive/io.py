"""CSV and JSON file formats.

Floats are written with 17 significant digits so that every double survives
a write/read round trip bit-exactly. Event files may start with a
``# horizon=<value>`` comment line; readers skip other ``#`` lines.
"""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import (
    MODEL_PARAMS,
    CompensatorPath,
    EventSequence,
    HazardSpec,
    IntensityModel,
    ValidationError,
    make_model,
    model_to_dict,
)
from .gaussian import GaussianPath, VelocityPath
from .markov import MarkovModel

PathLike = Union[str, Path]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _read_rows(path: PathLike, expected: Sequence[str]) -> tuple:
    """Return (comment metadata, rows) for a CSV with the given header."""
    meta = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            for item in line[1:].split(","):
                if "=" in item:
                    k, v = item.split("=", 1)
                    meta[k.strip()] = v.strip()
        elif line.strip():
            lines.append(line)
    if not lines:
        raise ValidationError(f"{path}: missing header {','.join(expected)}")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header != list(expected):
        raise ValidationError(f"{path}: header {header} != expected {list(expected)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(expected):
            raise ValidationError(f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}")
        rows.append(row)
    return meta, rows


def _float(value: str, where: str, name: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"{where}: field {name!r} is not a number: {value!r}") from None


def _meta_horizon(meta: dict, path) -> Optional[float]:
    if "horizon" not in meta:
        return None
    return _float(meta["horizon"], str(path), "horizon")


# ---------------------------------------------------------------------------
# events


def events_to_csv(seq: EventSequence) -> str:
    lines = [f"# horizon={fmt(seq.horizon)}", "time"] + [fmt(t) for t in seq.times]
    return "\n".join(lines) + "\n"


def write_events(path: PathLike, seq: EventSequence) -> None:
    Path(path).write_text(events_to_csv(seq))


def read_events(path: PathLike, horizon: Optional[float] = None, fallback: Optional[float] = None) -> EventSequence:
    """Read a ``time`` CSV; the horizon comes from the argument, then the
    comment line, then ``fallback``, then the last event time."""
    meta, rows = _read_rows(path, ["time"])
    times = [_float(r[0], f"{path}:{i + 2}", "time") for i, r in enumerate(rows)]
    h = horizon if horizon is not None else _meta_horizon(meta, path)
    if h is None and fallback is not None and (not times or fallback >= times[-1]):
        h = fallback
    if h is None:
        if not times:
            raise ValidationError(f"{path}: no events and no horizon given")
        h = times[-1]
    if len(set(times)) != len(times):
        raise ValidationError(f"{path}: duplicate event times")
    return EventSequence(h, times)


def ensemble_to_csv(ensemble: Sequence[EventSequence]) -> str:
    horizons = {seq.horizon for seq in ensemble}
    head = f"# n_paths={len(ensemble)}"
    if len(horizons) == 1:
        head += f",horizon={fmt(horizons.pop())}"
    buf = io.StringIO()
    buf.write(head + "\npath_id,time\n")
    for i, seq in enumerate(ensemble):
        for t in seq.times:
            buf.write(f"{i},{fmt(t)}\n")
    return buf.getvalue()


def write_ensemble(path: PathLike, ensemble: Sequence[EventSequence]) -> None:
    Path(path).write_text(ensemble_to_csv(ensemble))


def read_ensemble(path: PathLike, horizon: Optional[float] = None) -> list:
    meta, rows = _read_rows(path, ["path_id", "time"])
    h = horizon if horizon is not None else _meta_horizon(meta, path)
    if h is None:
        raise ValidationError(f"{path}: ensemble horizon unknown; pass it explicitly")
    by_path = defaultdict(list)
    for i, (pid, t) in enumerate(rows):
        try:
            key = int(pid)
        except ValueError:
            raise ValidationError(f"{path}:{i + 2}: field 'path_id' is not an integer: {pid!r}") from None
        by_path[key].append(_float(t, f"{path}:{i + 2}", "time"))
    n = int(meta.get("n_paths", max(by_path, default=-1) + 1))
    return [EventSequence(h, by_path.get(i, [])) for i in range(n)]


# ---------------------------------------------------------------------------
# compensators and gaussian paths


def write_compensator(path: PathLike, comp: CompensatorPath) -> None:
    write_series(path, comp.breakpoints, comp.values)


def read_compensator(path: PathLike) -> CompensatorPath:
    t, v = read_series(path)
    return CompensatorPath(t, v)


def write_series(path: PathLike, t: Iterable[float], values: Iterable[float]) -> None:
    lines = ["t,value"] + [f"{fmt(a)},{fmt(b)}" for a, b in zip(t, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_series(path: PathLike) -> tuple:
    _, rows = _read_rows(path, ["t", "value"])
    t = np.array([_float(r[0], f"{path}:{i + 2}", "t") for i, r in enumerate(rows)])
    v = np.array([_float(r[1], f"{path}:{i + 2}", "value") for i, r in enumerate(rows)])
    return t, v


def read_gaussian_path(path: PathLike) -> GaussianPath:
    return GaussianPath(*read_series(path))


def read_velocity(path: PathLike) -> VelocityPath:
    return VelocityPath(*read_series(path))


# ---------------------------------------------------------------------------
# JSON specs


def load_json(path: PathLike):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def model_from_json(obj) -> IntensityModel:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError("model JSON needs a 'kind' field")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError("model field 'params' must be an object")
    return make_model(obj["kind"], params)


def parse_model(text: str) -> IntensityModel:
    """``kind:v1,v2,...`` shorthand (values in family order) or a JSON file path."""
    if ":" in text and not Path(text).exists():
        kind, _, rest = text.partition(":")
        names = MODEL_PARAMS.get(kind)
        if names is None:
            raise ValidationError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_PARAMS)}")
        values = [v for v in rest.split(",") if v.strip()]
        if len(values) > len(names):
            raise ValidationError(f"model {kind!r} takes at most {len(names)} values ({', '.join(names)})")
        return make_model(kind, dict(zip(names, values)))
    return model_from_json(load_json(text))


def model_json(model: IntensityModel) -> str:
    return json.dumps(model_to_dict(model))


def read_hazard(path: PathLike) -> HazardSpec:
    return HazardSpec.from_dict(load_json(path))


def read_markov(path: PathLike) -> MarkovModel:
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: Markov model JSON must be an object")
    return MarkovModel.from_dict(obj)


def write_markov(path: PathLike, model: MarkovModel) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def read_state_path(path: PathLike) -> np.ndarray:
    """One state index per row, optional ``state`` header."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if lines and lines[0] == "state":
        lines = lines[1:]
    try:
        return np.array([int(ln) for ln in lines], dtype=np.int64)
    except ValueError:
        raise ValidationError(f"{path}: field 'state' must hold integer indices") from None


def write_state_path(path: PathLike, states: Sequence[int]) -> None:
    Path(path).write_text("state\n" + "".join(f"{int(s)}\n" for s in states))
