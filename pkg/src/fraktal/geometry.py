"""Prefractal construction from iterated function systems and grid covers.

A prefractal is stored as two read-only numpy arrays of interval endpoints.
Covers use grid-aligned boxes ``[origin + k*delta, origin + (k+1)*delta]``.
A box is counted when its overlap with the set has positive length, so
intervals that merely touch a box at one endpoint do not pull it in.
Degenerate intervals (``lo == hi``) claim the box whose half-open span
``[k*delta, (k+1)*delta)`` contains them.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceLimitError, ValidationError

DEFAULT_MAX_LEVEL = 20
MAX_LEVEL_ENV = "FRAKTAL_MAX_LEVEL"

# Tolerances for float noise in composed maps and grid quotients.
_MERGE_TOL = 1e-13
_SNAP_RTOL = 1e-9


def max_level() -> int:
    """Current prefractal level cap (env ``FRAKTAL_MAX_LEVEL`` overrides)."""
    raw = os.environ.get(MAX_LEVEL_ENV)
    if raw is None or raw == "":
        return DEFAULT_MAX_LEVEL
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{MAX_LEVEL_ENV} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValidationError(f"{MAX_LEVEL_ENV} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class IfsSpec:
    """Affine contractions ``x -> ratio*x + offset`` acting on [0, 1]."""

    maps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        maps = tuple((float(r), float(o)) for r, o in self.maps)
        object.__setattr__(self, "maps", maps)
        if not maps:
            raise ValidationError("an IFS needs at least one map")
        for ratio, offset in maps:
            if not (0.0 < ratio < 1.0):
                raise ValidationError(f"ratio must lie in (0, 1), got {ratio}")
            if not (0.0 <= offset < 1.0):
                raise ValidationError(f"offset must lie in [0, 1), got {offset}")
            if offset + ratio > 1.0 + _MERGE_TOL:
                raise ValidationError(
                    f"map ({ratio}, {offset}) sends [0, 1] outside [0, 1]"
                )
        # open-set condition checked on the level-1 images
        images = sorted((o, o + r) for r, o in maps)
        for (_, hi), (lo, _) in zip(images, images[1:]):
            if lo < hi - _MERGE_TOL:
                raise ValidationError("images of distinct maps overlap (open-set condition)")

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r for r, _ in self.maps])

    @classmethod
    def cantor(cls) -> "IfsSpec":
        return cls(((1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "IfsSpec":
        """Read ``ratio offset`` lines; blank lines and ``#`` comments are skipped."""
        maps = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 'ratio offset', got {line!r}")
            try:
                maps.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        return cls(tuple(maps))


NAMED_IFS = {
    "cantor": IfsSpec.cantor,
}


class IntervalSet:
    """Sorted, pairwise disjoint closed intervals.

    Instances are immutable; ``lo`` and ``hi`` are read-only float arrays.
    Use :meth:`from_pairs` to build one from unsorted or touching input.
    """

    __slots__ = ("_lo", "_hi", "level")

    def __init__(self, lo: Sequence[float], hi: Sequence[float], level: int = 0):
        lo = np.array(lo, dtype=float).ravel()
        hi = np.array(hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValidationError("lo and hi must have the same length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("interval endpoints must be finite")
        if np.any(lo > hi):
            raise ValidationError("every interval needs lo <= hi")
        if lo.size > 1 and np.any(hi[:-1] >= lo[1:]):
            raise ValidationError("intervals must be sorted and pairwise disjoint")
        if level < 0:
            raise ValidationError("level must be non-negative")
        lo.flags.writeable = False
        hi.flags.writeable = False
        self._lo = lo
        self._hi = hi
        self.level = int(level)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], level: int = 0) -> "IntervalSet":
        """Sort, then merge intervals that overlap or touch."""
        arr = np.array(list(pairs), dtype=float).reshape(-1, 2)
        lo, hi = _merge(arr[:, 0], arr[:, 1])
        return cls(lo, hi, level)

    @property
    def lo(self) -> np.ndarray:
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        return self._hi

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self._lo.tolist(), self._hi.tolist()))

    def __len__(self) -> int:
        return self._lo.size

    def __eq__(self, other):
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return np.array_equal(self._lo, other._lo) and np.array_equal(self._hi, other._hi)

    def __hash__(self):
        return hash((self._lo.tobytes(), self._hi.tobytes()))

    def __repr__(self):
        return f"IntervalSet(n={len(self)}, level={self.level}, total_length={self.total_length:.6g})"

    @property
    def total_length(self) -> float:
        return float(np.sum(self._hi - self._lo))

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        """Boolean membership of each point in ``x`` (closed intervals).

        Endpoints are widened by ``tol`` so that grid points which equal an
        endpoint in exact arithmetic are not lost to rounding.
        """
        x = np.asarray(x, dtype=float)
        if len(self) == 0:
            return np.zeros(x.shape, dtype=bool)
        idx = np.searchsorted(self._lo - tol, x, side="right") - 1
        inside = idx >= 0
        safe = np.clip(idx, 0, len(self) - 1)
        return inside & (x <= self._hi[safe] + tol)

    def clip(self, a: float, b: float) -> "IntervalSet":
        """Intersection with [a, b], dropping pieces that collapse to a point.

        Degenerate intervals of the original set survive when they lie in [a, b].
        """
        lo = np.maximum(self._lo, a)
        hi = np.minimum(self._hi, b)
        orig_point = self._lo == self._hi
        keep = (hi > lo) | (orig_point & (self._lo >= a) & (self._lo <= b))
        return IntervalSet(lo[keep], hi[keep], self.level)

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("lo,hi\n")
            for lo, hi in zip(self._lo, self._hi):
                fh.write(f"{format_float(lo)},{format_float(hi)}\n")

    @classmethod
    def read_csv(cls, path: str | os.PathLike, level: int = 0) -> "IntervalSet":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["lo", "hi"]:
                raise ValidationError(f"{path}: expected header 'lo,hi'")
            pairs = [(float(row["lo"]), float(row["hi"])) for row in reader]
        return cls.from_pairs(pairs, level)


def format_float(value: float) -> str:
    """17 significant digits, locale independent."""
    return format(float(value), ".17g")


def _merge(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if lo.size == 0:
        return lo.copy(), hi.copy()
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    running_hi = np.maximum.accumulate(hi)
    # a new run starts where the next lo clears everything seen so far
    starts = np.ones(lo.size, dtype=bool)
    starts[1:] = lo[1:] > running_hi[:-1] + _MERGE_TOL
    run_id = np.cumsum(starts) - 1
    out_lo = lo[starts]
    out_hi = np.zeros(out_lo.size)
    np.maximum.at(out_hi, run_id, hi)
    return out_lo, np.maximum(out_hi, out_lo)


def build_prefractal(ifs: IfsSpec, level: int) -> IntervalSet:
    """Level-``level`` iterate of ``ifs`` applied to [0, 1]."""
    if level < 0:
        raise ValidationError("level must be non-negative")
    cap = max_level()
    if level > cap:
        raise ResourceLimitError(f"level {level} exceeds cap {cap} (set {MAX_LEVEL_ENV} to raise it)")
    lo = np.array([0.0])
    hi = np.array([1.0])
    for _ in range(level):
        lo = np.concatenate([r * lo + o for r, o in ifs.maps])
        hi = np.concatenate([r * hi + o for r, o in ifs.maps])
        lo, hi = _merge(lo, hi)
    return IntervalSet(lo, hi, level)


def _snap(q: np.ndarray) -> np.ndarray:
    r = np.round(q)
    close = np.abs(q - r) <= _SNAP_RTOL * np.maximum(1.0, np.abs(q))
    return np.where(close, r, q)


def box_ranges(lo, hi, delta: float, origin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """First and last grid box index touched with positive overlap per interval.

    Ranges with ``kmax < kmin`` are empty.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    qlo = _snap((lo - origin) / delta)
    qhi = _snap((hi - origin) / delta)
    kmin = np.floor(qlo).astype(np.int64)
    kmax = np.ceil(qhi).astype(np.int64) - 1
    # a true point still claims the box it sits in; a sliver that snaps to
    # zero width on a box boundary claims nothing
    point = hi == lo
    kmax = np.where(point, np.maximum(kmax, kmin), kmax)
    return kmin, kmax


@dataclass(frozen=True, eq=False)
class DeltaCover:
    delta: float
    boxes: np.ndarray
    origin: float = 0.0

    def __len__(self) -> int:
        return int(self.boxes.size)

    def box_bounds(self) -> np.ndarray:
        """(n, 2) array of box endpoints."""
        left = self.origin + self.boxes * self.delta
        return np.column_stack([left, left + self.delta])


def count_boxes(set_: IntervalSet, delta: float, origin: float = 0.0) -> int:
    """Number of distinct cover boxes; cheaper than building the index list."""
    if delta <= 0 or not math.isfinite(delta):
        raise ValidationError(f"delta must be positive and finite, got {delta}")
    if len(set_) == 0:
        return 0
    kmin, kmax = box_ranges(set_.lo, set_.hi, delta, origin)
    # sorted disjoint input: a range can only overlap boxes already claimed to its left
    start = kmin.copy()
    start[1:] = np.maximum(kmin[1:], np.maximum.accumulate(kmax)[:-1] + 1)
    return int(np.sum(np.maximum(kmax - start + 1, 0)))


def delta_cover(set_: IntervalSet, delta: float, origin: float = 0.0) -> DeltaCover:
    """Grid boxes of side ``delta`` meeting ``set_`` in a set of positive length."""
    if delta <= 0 or not math.isfinite(delta):
        raise ValidationError(f"delta must be positive and finite, got {delta}")
    if len(set_) == 0:
        return DeltaCover(float(delta), np.zeros(0, dtype=np.int64), float(origin))
    kmin, kmax = box_ranges(set_.lo, set_.hi, delta, origin)
    counts = kmax - kmin + 1
    offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    boxes = np.unique(np.repeat(kmin, counts) + offsets)
    boxes.flags.writeable = False
    return DeltaCover(float(delta), boxes, float(origin))


def similarity_dimension(ifs: IfsSpec, tol: float = 1e-12) -> float:
    """Root ``s`` of ``sum(ratio_i ** s) = 1`` by bisection."""
    ratios = ifs.ratios
    if ratios.size == 1:
        return 0.0

    def excess(s):
        return float(np.sum(ratios**s)) - 1.0

    lo, hi = 0.0, 1.0
    # sum-of-ratios may exceed 1 only through float noise when the maps tile [0, 1]
    while excess(hi) > 0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
