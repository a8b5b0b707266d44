"""Power-law fits, operator comparison tables and convergence studies."""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, FraktalError, ValidationError
from .geometry import format_float
from .measure import StaircaseFunction
from .operators import OperatorConfig, SampledFunction, evaluate

FIT_METHODS = ("nonlinear_ls", "loglog_ls")

LM_LAMBDA0 = 1e-3
LM_MAX_ITER = 200
LM_RTOL = 1e-10
_RSS_SLACK = 16 * np.finfo(float).eps


@dataclass(frozen=True)
class PowerLawFit:
    """Parameters of ``y = a * x**b``; ``rss`` is always measured on the linear scale."""

    a: float
    b: float
    rss: float
    method: str
    n_points: int
    dropped: int = 0
    iterations: int = 0

    def __call__(self, x):
        return self.a * np.asarray(x, dtype=float) ** self.b

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "rss": self.rss,
            "method": self.method,
            "n_points": self.n_points,
            "dropped": self.dropped,
            "iterations": self.iterations,
        }


def _rss(xs, ys, a, b) -> float:
    return float(np.sum((ys - a * xs**b) ** 2))


def _loglog(xs, ys) -> tuple[float, float]:
    lx, ly = np.log(xs), np.log(ys)
    lxm, lym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - lxm) ** 2))
    if sxx == 0:
        raise ValidationError("all x values coincide; exponent is undetermined")
    b = float(np.sum((lx - lxm) * (ly - lym)) / sxx)
    return math.exp(lym - b * lxm), b


def _levenberg_marquardt(xs, ys, a, b):
    """Damped Gauss-Newton with Marquardt diagonal scaling.

    Returns ``(a, b, rss, iterations)``; raises :class:`ConvergenceError`
    with the best iterate after ``LM_MAX_ITER`` iterations.
    """
    lam = LM_LAMBDA0
    lx = np.log(xs)
    cur = _rss(xs, ys, a, b)
    for it in range(1, LM_MAX_ITER + 1):
        model = a * xs**b
        r = ys - model
        jac = np.column_stack([xs**b, model * lx])
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(np.diag(jtj))
        while True:
            try:
                step = np.linalg.solve(jtj + lam * diag, jtr)
            except np.linalg.LinAlgError:
                step = np.zeros(2)
            na, nb = a + step[0], b + step[1]
            trial = _rss(xs, ys, na, nb) if np.all(np.isfinite(step)) else math.inf
            # near the minimum rss is flat to rounding; let the parameter test decide there
            if trial <= cur * (1.0 + _RSS_SLACK):
                lam /= 10.0
                break
            lam *= 10.0
            if lam > 1e16:
                # no descent direction left; current iterate is a stationary point
                return a, b, cur, it
        change = max(abs(step[0]) / max(abs(na), 1e-300), abs(step[1]) / max(abs(nb), 1e-300))
        a, b, cur = na, nb, trial
        if change < LM_RTOL:
            return a, b, cur, it
    raise ConvergenceError(
        f"no convergence after {LM_MAX_ITER} iterations",
        best=PowerLawFit(float(a), float(b), cur, "nonlinear_ls", int(xs.size), 0, LM_MAX_ITER),
    )


def fit_power_law(xs: Sequence[float], ys: Sequence[float], method: str = "nonlinear_ls") -> PowerLawFit:
    """Fit ``y = a * x**b``.

    ``loglog_ls`` is ordinary least squares on ``(log x, log y)`` and drops
    points with ``y <= 0``. ``nonlinear_ls`` minimises the linear-scale
    residual sum of squares, starting from the log-log estimate.
    """
    if method not in FIT_METHODS:
        raise ValidationError(f"unknown fit method {method!r}")
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise ValidationError("xs and ys must have the same length")
    if xs.size < 3:
        raise ValidationError("need at least three points")
    if np.any(xs <= 0) or not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise ValidationError("xs must be positive and all values finite")
    positive = ys > 0
    dropped = int(np.sum(~positive))
    if np.sum(positive) < 3:
        raise ValidationError("fewer than three points with positive y")
    a0, b0 = _loglog(xs[positive], ys[positive])
    if method == "loglog_ls":
        return PowerLawFit(a0, b0, _rss(xs[positive], ys[positive], a0, b0), method,
                           int(positive.sum()), dropped)
    a, b, rss, iters = _levenberg_marquardt(xs, ys, a0, b0)
    return PowerLawFit(float(a), float(b), float(rss), method, int(xs.size), 0, iters)


# --------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    """Operator values on a common x-grid with pairwise ratios.

    ``columns`` maps each config label to its values (NaN where evaluation
    failed); ``ratios`` maps ``"A/B"`` to ``columns[A] / columns[B]`` where
    both are finite and nonzero.
    """

    x: np.ndarray
    columns: dict[str, np.ndarray]
    ratios: dict[str, np.ndarray]
    summary: dict[str, dict[str, float]]
    metadata: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def to_csv(self, path: str | os.PathLike) -> None:
        names = list(self.columns) + [f"ratio:{k}" for k in self.ratios]
        data = list(self.columns.values()) + list(self.ratios.values())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", *names])
            for i, x in enumerate(self.x):
                w.writerow([format_float(x), *(_cell(col[i]) for col in data)])

    def to_json(self, path: str | os.PathLike) -> None:
        payload = {
            "metadata": self.metadata,
            "summary": self.summary,
            "failures": self.failures,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _cell(v: float) -> str:
    return "" if not math.isfinite(v) else format_float(v)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def compare_operators(
    h: SampledFunction,
    configs: Sequence[OperatorConfig],
    xs: Sequence[float],
    staircase: Optional[StaircaseFunction] = None,
) -> ComparisonReport:
    """Evaluate every config at every x and tabulate pairwise ratios.

    Per-cell errors become NaN entries listed in ``failures``.
    """
    if not configs:
        raise ValidationError("need at least one operator config")
    xs = np.asarray(xs, dtype=float).ravel()
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate operator configs")
    by_label = dict(sorted(zip(labels, configs)))
    columns: dict[str, np.ndarray] = {}
    failures = []
    for label, cfg in by_label.items():
        col = np.full(xs.size, np.nan)
        for i, x in enumerate(xs):
            try:
                col[i] = evaluate(cfg, h, float(x), staircase)
            except (FraktalError, ArithmeticError) as exc:
                failures.append({"config": label, "x": float(x), "error": f"{type(exc).__name__}: {exc}"})
        columns[label] = col

    ratios: dict[str, np.ndarray] = {}
    summary: dict[str, dict[str, float]] = {}
    for num, den in itertools.combinations(columns, 2):
        top, bottom = columns[num], columns[den]
        ok = np.isfinite(top) & np.isfinite(bottom) & (top != 0) & (bottom != 0)
        ratio = np.full(xs.size, np.nan)
        ratio[ok] = top[ok] / bottom[ok]
        key = f"{num}/{den}"
        ratios[key] = ratio
        if ok.any():
            mean = float(np.mean(ratio[ok]))
            summary[key] = {
                "mean": mean,
                "max_deviation": float(np.max(np.abs(ratio[ok] - mean))),
                "n": int(ok.sum()),
            }
        else:
            summary[key] = {"mean": math.nan, "max_deviation": math.nan, "n": 0}
    metadata = {"configs": [by_label[k].to_dict() for k in columns]}
    return ComparisonReport(xs, columns, ratios, summary, metadata, failures)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    value: float
    error: float
    order: float  # observed order against the previous row; NaN on the first


def convergence_study(
    make_h: Callable[[int], SampledFunction],
    config: OperatorConfig,
    mesh_sizes: Sequence[int],
    oracle: float,
    x: float,
) -> list[ConvergenceRow]:
    """Errors of ``config`` at ``x`` against ``oracle`` as the mesh is refined.

    ``make_h(n)`` returns the sampled input for mesh size ``n``; the
    observed order between consecutive rows is ``log(e1/e2) / log(n2/n1)``.
    """
    if oracle is None or not math.isfinite(oracle):
        raise ValidationError("oracle value is undefined at the probe point")
    sizes = [int(n) for n in mesh_sizes]
    if len(sizes) < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError("mesh sizes must be strictly increasing (at least two)")
    rows = []
    prev = None
    for n in sizes:
        value = evaluate(config, make_h(n), x)
        err = abs(value - oracle)
        if prev is None or prev[1] == 0 or err == 0:
            order = math.nan
        else:
            order = math.log(prev[1] / err) / math.log(n / prev[0])
        rows.append(ConvergenceRow(n, float(value), float(err), float(order)))
        prev = (n, err)
    return rows


def convergence_to_csv(rows: Sequence[ConvergenceRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("n,value,abs_error,observed_order\n")
        for r in rows:
            fh.write(f"{r.n},{format_float(r.value)},{format_float(r.error)},{_cell(r.order)}\n")
