"""
Spatial profiles and boundary schedules parsed from scenario files.

Profiles are functions of the local edge coordinate ``x in [0, length]``;
schedules are functions of time. Both are evaluated exactly, so initial data
can be checked for compatibility at the pipe ends.

Profile kinds::

    {"constant": a}
    {"linear": [left, right]}
    {"samples": [y0, y1, ...]}        uniformly spaced over [0, length]
    {"bump": {"base": a, "amplitude": b, "center": x0, "width": w}}
    {"sine": {"base": a, "amplitude": b, "modes": k}}

Schedule kinds::

    {"constant": a}
    {"piecewise_linear": [[t0, y0], [t1, y1], ...]}   held constant outside
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..exceptions import ConfigurationError
from .types import ArrayLike, FloatArray

PROFILE_KINDS = ("constant", "linear", "samples", "bump", "sine")
SCHEDULE_KINDS = ("constant", "piecewise_linear")


def _single_key(doc: Any, allowed: tuple[str, ...], what: str) -> tuple[str, Any]:
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise ConfigurationError(
            f"{what} must be an object with exactly one of {allowed}", {"doc": doc}
        )
    ((kind, value),) = doc.items()
    if kind not in allowed:
        raise ConfigurationError(f"unknown key '{kind}' in {what}", {"allowed": allowed})
    return str(kind), value


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigurationError(f"{what} must be a number", {"value": value})
    return float(value)


@dataclass(frozen=True)
class Profile:
    """A function of the edge coordinate."""

    kind: str
    params: tuple[float, ...]
    length: float

    def __call__(self, x: ArrayLike) -> FloatArray:
        xs = np.asarray(x, dtype=np.float64)
        match self.kind:
            case "constant":
                return np.full_like(xs, self.params[0])
            case "linear":
                left, right = self.params
                return left + (right - left) * xs / self.length
            case "samples":
                grid = np.linspace(0.0, self.length, len(self.params))
                return np.interp(xs, grid, np.asarray(self.params))
            case "bump":
                base, amplitude, center, width = self.params
                z = (xs - center) / width
                shape = np.where(np.abs(z) < 1.0, np.cos(0.5 * np.pi * z) ** 2, 0.0)
                return base + amplitude * shape
            case "sine":
                base, amplitude, modes = self.params
                return base + amplitude * np.sin(np.pi * modes * xs / self.length)
        raise ConfigurationError(f"unknown profile kind '{self.kind}'")


def parse_profile(doc: Any, length: float) -> Profile:
    kind, value = _single_key(doc, PROFILE_KINDS, "profile")
    match kind:
        case "constant":
            params: tuple[float, ...] = (_number(value, "constant profile"),)
        case "linear":
            if not isinstance(value, list) or len(value) != 2:
                raise ConfigurationError("linear profile needs [left, right]", {"value": value})
            params = tuple(_number(v, "linear profile") for v in value)
        case "samples":
            if not isinstance(value, list) or len(value) < 2:
                raise ConfigurationError("samples profile needs at least two values")
            params = tuple(_number(v, "samples profile") for v in value)
        case "bump":
            params = _keyed(value, ("base", "amplitude", "center", "width"), "bump profile")
            if params[3] <= 0.0:
                raise ConfigurationError("bump width must be positive", {"width": params[3]})
        case _:
            params = _keyed(value, ("base", "amplitude", "modes"), "sine profile")
    return Profile(kind, params, length)


def _keyed(value: Any, keys: tuple[str, ...], what: str) -> tuple[float, ...]:
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"{what} must be an object", {"value": value})
    unknown = set(value) - set(keys)
    if unknown:
        raise ConfigurationError(f"unknown key '{sorted(unknown)[0]}' in {what}")
    missing = [k for k in keys if k not in value]
    if missing:
        raise ConfigurationError(f"missing key '{missing[0]}' in {what}")
    return tuple(_number(value[k], f"{what}.{k}") for k in keys)


@dataclass(frozen=True)
class Schedule:
    """A boundary value as a function of time."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    @classmethod
    def constant(cls, value: float) -> Schedule:
        return cls((0.0,), (float(value),))

    def __call__(self, t: float) -> float:
        if len(self.times) == 1:
            return self.values[0]
        return float(np.interp(t, self.times, self.values))

    def shifted(self, offset: float) -> Schedule:
        return Schedule(tuple(t - offset for t in self.times), self.values)


def parse_schedule(doc: Any) -> Schedule:
    kind, value = _single_key(doc, SCHEDULE_KINDS, "schedule")
    if kind == "constant":
        return Schedule.constant(_number(value, "constant schedule"))
    if not isinstance(value, list) or not value:
        raise ConfigurationError("piecewise_linear schedule needs [[t, value], ...]")
    times, values = [], []
    for point in value:
        if not isinstance(point, list) or len(point) != 2:
            raise ConfigurationError("schedule points must be [t, value]", {"point": point})
        times.append(_number(point[0], "schedule time"))
        values.append(_number(point[1], "schedule value"))
    if any(b <= a for a, b in zip(times, times[1:], strict=False)):
        raise ConfigurationError("schedule times must be strictly increasing", {"times": times})
    return Schedule(tuple(times), tuple(values))
