"""Built-in test functions addressed by short names on the command line.

Specs: ``t``, ``t2``, ``exp``, ``qexp:<q>``, ``power:<p>`` and
``csv:<path>`` (columns ``x,value`` on a uniform grid).
"""

from __future__ import annotations

import csv
from typing import Callable

import numpy as np

from .errors import ValidationError
from .operators import SampledFunction, q_exponential


def resolve(spec: str) -> Callable[[np.ndarray], np.ndarray]:
    name, _, arg = spec.partition(":")
    if name == "t" and not arg:
        return lambda t: np.asarray(t, dtype=float).copy()
    if name == "t2" and not arg:
        return lambda t: np.asarray(t, dtype=float) ** 2
    if name == "exp" and not arg:
        return np.exp
    if name == "qexp":
        q = _number(arg, spec)
        return lambda t: q_exponential(t, q)
    if name == "power":
        p = _number(arg, spec)
        return lambda t: np.asarray(t, dtype=float) ** p
    raise ValidationError(f"unknown function spec {spec!r}")


def _number(arg: str, spec: str) -> float:
    try:
        return float(arg)
    except ValueError as exc:
        raise ValidationError(f"function spec {spec!r} needs a numeric parameter") from exc


def read_samples(path: str) -> SampledFunction:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "x" not in reader.fieldnames:
            raise ValidationError(f"{path}: expected a header with 'x' and 'value'")
        ycol = "value" if "value" in reader.fieldnames else reader.fieldnames[1]
        rows = [(float(r["x"]), float(r[ycol])) for r in reader]
    arr = np.array(rows)
    return SampledFunction(arr[:, 0], arr[:, 1])


def sample(spec: str, lo: float, hi: float, n: int) -> SampledFunction:
    """Sample a named function, or load ``csv:<path>`` as is."""
    if spec.startswith("csv:"):
        return read_samples(spec[4:])
    return SampledFunction.from_callable(resolve(spec), lo, hi, n)
