"""Mass distributions, staircase functions and box-counting dimension.

The mass of ``[a, b]`` is ``N * delta**alpha`` with ``N`` the number of grid
boxes meeting ``set ∩ [a, b]`` in a piece of positive length. Because a box
sitting on the far side of a box boundary never contributes, masses add up
exactly across box boundaries and the mass of a degenerate range is zero.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .geometry import IntervalSet, count_boxes, format_float


def _check_params(alpha: float, delta: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    if not (delta > 0.0 and math.isfinite(delta)):
        raise ValidationError(f"delta must be positive and finite, got {delta}")


def mass_distribution(
    set_: IntervalSet, alpha: float, delta: float, a: float, b: float, origin: float = 0.0
) -> float:
    """Grid-cover mass of ``set_ ∩ [a, b]`` in dimension ``alpha``."""
    _check_params(alpha, delta)
    if not a <= b:
        raise ValidationError(f"need a <= b, got a={a}, b={b}")
    n = count_boxes(set_.clip(a, b), delta, origin)
    return n * delta**alpha


@dataclass(frozen=True, eq=False)
class StaircaseFunction:
    """Sampled staircase ``x -> S(x)`` with base point ``a0``.

    Values are the mass between ``a0`` and ``x``, so they increase away
    from ``a0`` on either side. ``support`` keeps the generating set, which
    lets :meth:`__call__` evaluate exactly off the sample grid.
    """

    grid: np.ndarray
    values: np.ndarray
    alpha: float
    delta: float
    a0: float
    origin: float = 0.0
    support: IntervalSet | None = field(default=None, compare=False, repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.support is not None:
            flat = [_staircase_value(self.support, self.alpha, self.delta, self.a0, xi, self.origin)
                    for xi in x.ravel()]
            return np.array(flat).reshape(x.shape)
        # sample-only: take the nearest sample on the a0 side of x
        idx = np.where(x >= self.a0,
                       np.searchsorted(self.grid, x, side="right") - 1,
                       np.searchsorted(self.grid, x, side="left"))
        idx = np.clip(idx, 0, self.grid.size - 1)
        return self.values[idx]

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("x,S\n")
            for x, s in zip(self.grid, self.values):
                fh.write(f"{format_float(x)},{format_float(s)}\n")


def _staircase_value(set_, alpha, delta, a0, x, origin):
    if x > a0:
        return mass_distribution(set_, alpha, delta, a0, x, origin)
    if x < a0:
        return mass_distribution(set_, alpha, delta, x, a0, origin)
    return 0.0


def staircase(
    set_: IntervalSet,
    alpha: float,
    delta: float,
    a0: float,
    grid: Sequence[float],
    origin: float = 0.0,
) -> StaircaseFunction:
    """Evaluate the staircase function of ``set_`` on ``grid``."""
    _check_params(alpha, delta)
    grid = np.array(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValidationError("grid must not be empty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly ascending")
    values = np.array([_staircase_value(set_, alpha, delta, a0, x, origin) for x in grid])
    grid.flags.writeable = False
    values.flags.writeable = False
    return StaircaseFunction(grid, values, float(alpha), float(delta), float(a0), float(origin), set_)


@dataclass(frozen=True)
class DimensionEstimate:
    alpha_hat: float
    stderr: float
    pairs: tuple[tuple[float, int], ...]
    intercept: float = 0.0

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "stderr": self.stderr,
            "pairs": [[d, n] for d, n in self.pairs],
        }

    def to_json(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _slope_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """OLS slope, intercept and slope standard error."""
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if n > 2:
        resid = y - (intercept + slope * x)
        stderr = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sxx)
    else:
        stderr = 0.0
    return slope, intercept, stderr


def box_counting_dimension(
    set_: IntervalSet, deltas: Sequence[float], origin: float = 0.0
) -> DimensionEstimate:
    """Slope of ``log N(delta)`` against ``log(1/delta)``."""
    deltas = [float(d) for d in deltas]
    if len(deltas) < 2:
        raise ValidationError("need at least two deltas")
    if any(not (d > 0 and math.isfinite(d)) for d in deltas):
        raise ValidationError("deltas must be positive and finite")
    if len(set(deltas)) < 2:
        raise ValidationError("degenerate regression: all deltas are equal")
    counts = [count_boxes(set_, d, origin) for d in deltas]
    if min(counts) == 0:
        raise ValidationError("empty cover; cannot take log of a zero box count")
    x = np.log(1.0 / np.array(deltas))
    y = np.log(np.array(counts, dtype=float))
    slope, intercept, stderr = _slope_fit(x, y)
    return DimensionEstimate(slope, stderr, tuple(zip(deltas, counts)), intercept)


@dataclass(frozen=True, eq=False)
class MassLadder:
    """Masses over a shrinking delta ladder plus a linear extrapolation to delta = 0.

    The extrapolated value is an estimate from grid covers, not the Hausdorff
    measure itself.
    """

    deltas: tuple[float, ...]
    masses: tuple[float, ...]
    extrapolated: float


def mass_ladder(
    set_: IntervalSet, alpha: float, deltas: Sequence[float], origin: float = 0.0
) -> MassLadder:
    """Total mass at each delta in ``deltas``, extrapolated linearly in delta."""
    deltas = sorted({float(d) for d in deltas}, reverse=True)
    if len(deltas) < 2:
        raise ValidationError("need at least two distinct deltas")
    if not set_.intervals:
        return MassLadder(tuple(deltas), tuple(0.0 for _ in deltas), 0.0)
    lo, hi = float(set_.lo[0]), float(set_.hi[-1])
    masses = [mass_distribution(set_, alpha, d, lo, hi, origin) for d in deltas]
    _, intercept, _ = _slope_fit(np.array(deltas), np.array(masses))
    return MassLadder(tuple(deltas), tuple(masses), intercept)
