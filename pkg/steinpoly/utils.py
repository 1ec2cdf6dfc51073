"""Module defining utility functions."""
from __future__ import annotations

import os
import json
import math
import typing
import logging
from fractions import Fraction

import numpy as np
import voluptuous as vol
from joblib import Parallel, delayed

from steinpoly.config import THREADS_ENV_VAR, cv_rational
from steinpoly.exceptions import InvalidArgument

LOGGER = logging.getLogger(__name__)

Exact = typing.Union[int, Fraction]


def as_fraction(value) -> Fraction:
    """Coerce with cv_rational, raising InvalidArgument instead of vol.Invalid."""
    try:
        return cv_rational(value)
    except vol.Invalid as exc:
        raise InvalidArgument(str(exc)) from exc


def falling(x, k: int):
    """Return x(x-1)...(x-k+1), the empty product being 1."""
    result = 1
    for i in range(k):
        result = result * (x - i)
    return result


def rising(x, k: int):
    """Return x(x+1)...(x+k-1), the empty product being 1."""
    result = 1
    for i in range(k):
        result = result * (x + i)
    return result


def chebyshev_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Return `count` Chebyshev points of the first kind mapped to [lo, hi]."""
    if count < 1:
        raise InvalidArgument(f"Grid needs at least one point, got {count}")
    k = np.arange(count)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * count))[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes


def parse_grid(spec: str) -> np.ndarray:
    """Parse the inclusive `lo:hi:count` grid syntax."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise InvalidArgument(f"Grid must read lo:hi:count, got {spec!r}")

    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InvalidArgument(f"Malformed grid {spec!r}") from exc

    if count < 1 or hi < lo or (count > 1 and hi == lo):
        raise InvalidArgument(f"Degenerate grid {spec!r}")

    return np.linspace(lo, hi, count)


def thread_count() -> int:
    """Return the worker cap read from the environment, 1 when unset."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return 1

    try:
        value = int(raw)
    except ValueError:
        value = 0

    if value < 1:
        LOGGER.warning("Ignoring invalid %s=%r, running serially",
                       THREADS_ENV_VAR, raw)
        return 1

    return value


def parallel_map(func: typing.Callable, items: typing.Iterable) -> list:
    """Map `func` over `items` with the threading backend of joblib.

    Results keep the order of `items` whatever the worker count.
    """
    items = list(items)
    n_jobs = min(thread_count(), max(len(items), 1))
    if n_jobs == 1:
        return [func(item) for item in items]

    LOGGER.debug("Dispatching %d tasks over %d threads", len(items), n_jobs)
    return Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(func)(item) for item in items
    )


def _finite_or_none(item):
    """Replace non-finite floats, which JSON cannot carry, by None."""
    if isinstance(item, float) and not math.isfinite(item):
        return None
    if isinstance(item, dict):
        return {k: _finite_or_none(v) for k, v in item.items()}
    if isinstance(item, (list, tuple)):
        return [_finite_or_none(v) for v in item]
    return item


def _json_default(item):
    """Hook for the numpy values json does not know about."""
    if isinstance(item, np.ndarray):
        return _finite_or_none(item.tolist())
    if isinstance(item, np.generic):
        return _finite_or_none(item.item())
    raise TypeError(f"Cannot serialize {type(item).__name__}")


def json_dumps(obj, indent: int = 2) -> str:
    """Serialize plain data to JSON.

    Floats are written with their shortest round-trip repr so that reading the
    document back gives the same doubles.  NaN and infinities become null.
    """
    return json.dumps(_finite_or_none(obj), indent=indent,
                      default=_json_default, allow_nan=False) + "\n"
