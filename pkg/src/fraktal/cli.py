"""Command-line front end: ``fraktal <subcommand> [options]``.

Every subcommand writes its outputs plus ``<subcommand>.manifest.json`` into
``--out-dir``. ``fraktal verify <manifest>`` re-hashes the listed outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__, functions
from .analysis import (
    compare_operators,
    convergence_study,
    convergence_to_csv,
    fit_power_law,
)
from .errors import FraktalError, ValidationError
from .geometry import NAMED_IFS, IfsSpec, IntervalSet, build_prefractal, format_float, similarity_dimension
from .manifest import verify_manifest, write_manifest
from .measure import box_counting_dimension, staircase
from .operators import (
    OperatorConfig,
    SampledFunction,
    coefficient,
    evaluate,
    q_exponential,
)
from .plotting import plot_convergence, plot_staircase_fit

log = logging.getLogger("fraktal")

FIG1_INTERVAL = (0.61, 0.66)
FIG1_REFERENCE_DIM = math.log(2) / math.log(3)

OP_ALIASES = {
    "localfractal": "local_fractal",
    "qderiv": "q_deriv",
    "caputo": "caputo",
    "caputolike": "caputo_like_window",
    "fractalspace": "fractal_space_window",
    "fractalfunction": "fractal_function_window",
}
OP_ALIASES.update({k: k for k in (
    "local_fractal", "q_deriv", "caputo_like_window", "fractal_space_window", "fractal_function_window")})


# --------------------------------------------------------------------------
# helpers


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _finish(args, command: str, parameters: dict, outputs: list[Path], inputs=()) -> Path:
    return write_manifest(
        args.out_dir, command, args.argv, parameters, outputs, inputs,
        timestamp=not args.no_timestamp, name=f"{command}.manifest.json",
    )


def _load_set(args) -> tuple[IntervalSet, Optional[IfsSpec]]:
    if getattr(args, "set_file", None):
        return IntervalSet.read_csv(args.set_file), None
    ifs = _load_ifs(args)
    return build_prefractal(ifs, args.level), ifs


def _load_ifs(args) -> IfsSpec:
    if getattr(args, "ifs_file", None):
        return IfsSpec.from_file(args.ifs_file)
    name = getattr(args, "ifs", None) or "cantor"
    try:
        return NAMED_IFS[name]()
    except KeyError:
        raise ValidationError(f"unknown IFS {name!r}; known: {', '.join(NAMED_IFS)}") from None


def _add_set_source(p: argparse.ArgumentParser, with_file: bool = True) -> None:
    if with_file:
        p.add_argument("--set-file", help="interval CSV with header lo,hi")
    p.add_argument("--ifs", help="named IFS (default cantor)")
    p.add_argument("--ifs-file", help="IFS file with 'ratio offset' lines")
    p.add_argument("--level", type=int, default=4, help="prefractal level (default 4)")


def _probe_points(args) -> np.ndarray:
    if args.x_range is not None:
        a, b, n = args.x_range
        return np.linspace(float(a), float(b), int(n))
    if args.x:
        return np.array(args.x, dtype=float)
    raise ValidationError("give --x or --x-range")


def _grid_for(xs: np.ndarray, window: float, step: Optional[float], n_per_unit: int = 4096) -> tuple[float, float, int]:
    """Uniform grid anchored at min(xs) holding every probe point and window."""
    if step is None:
        step = (window if window > 0 else 1.0) / n_per_unit
    if xs.size > 1:
        spacing = float(np.min(np.diff(np.sort(xs))))
        if spacing > 0:
            step = spacing / math.ceil(spacing / step - 1e-9)
    x0 = float(np.min(xs))
    below = math.ceil(window / step - 1e-9) + 2
    above = math.ceil((float(np.max(xs)) - x0) / step - 1e-9) + 2
    return x0 - below * step, x0 + above * step, below + above + 1


def _sample_fn(spec: str, lo: float, hi: float, n: int) -> SampledFunction:
    if spec.startswith("csv:"):
        return functions.read_samples(spec[4:])
    fn = functions.resolve(spec)
    grid = np.linspace(lo, hi, n)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.asarray(fn(grid), dtype=float)
    finite = np.isfinite(vals)
    if not finite.any():
        raise ValidationError(f"{spec} is undefined on [{lo}, {hi}]")
    # trim samples outside the function's domain (e.g. power:0.5 below 0)
    first, last = np.argmax(finite), finite.size - np.argmax(finite[::-1])
    return SampledFunction(grid[first:last], vals[first:last])


def _config_from_flags(args) -> OperatorConfig:
    kind = OP_ALIASES.get(args.op)
    if kind is None:
        raise ValidationError(f"unknown --op {args.op!r}")
    if kind == "caputo":
        order = args.nu
        name = "--nu"
    elif kind == "q_deriv":
        order = args.q
        name = "--q"
    else:
        order = args.alpha
        name = "--alpha"
    if order is None:
        raise ValidationError(f"--op {args.op} needs {name}")
    return OperatorConfig(kind, float(order), float(args.window or 0.0), args.coeff, args.quad)


def parse_config(text: str) -> OperatorConfig:
    """``kind:order=0.5,window=1,coeff=full,quad=l1`` -> OperatorConfig."""
    kind, _, rest = text.partition(":")
    kind = OP_ALIASES.get(kind, kind)
    fields: dict = {}
    for item in filter(None, rest.split(",")):
        key, _, value = item.partition("=")
        key = key.strip()
        if key in ("order", "alpha", "nu", "q"):
            fields["order"] = float(value)
        elif key == "window":
            fields["window"] = float(value)
        elif key in ("coeff", "coeff_mode"):
            fields["coeff_mode"] = value
        elif key == "quad":
            fields["quad"] = value
        else:
            raise ValidationError(f"unknown config key {key!r} in {text!r}")
    if "order" not in fields:
        raise ValidationError(f"config {text!r} lacks an order")
    return OperatorConfig(kind, **fields)


# --------------------------------------------------------------------------
# analytic oracles for the built-in functions


def _exact_derivative(spec: str) -> Optional[Callable]:
    name, _, arg = spec.partition(":")
    if name == "t":
        return lambda t: np.ones_like(np.asarray(t, dtype=float))
    if name == "t2":
        return lambda t: 2.0 * np.asarray(t, dtype=float)
    if name == "exp":
        return np.exp
    if name == "power":
        p = float(arg)
        return lambda t: p * np.asarray(t, dtype=float) ** (p - 1.0)
    if name == "qexp":
        q = float(arg)
        return lambda t: q_exponential(t, q) ** q
    return None


def oracle_value(config: OperatorConfig, spec: str, x: float) -> Optional[float]:
    """Closed-form operator value for a built-in function, or ``None`` if unknown."""
    if spec.startswith("csv:"):
        return None
    fn = functions.resolve(spec)
    dfn = _exact_derivative(spec)
    name, _, arg = spec.partition(":")
    w = config.window
    kind = config.kind
    hx = float(fn(np.array(x)))
    if kind in ("local_fractal", "q_deriv"):
        e = config.order
        c = coefficient(e, config.coeff_mode) if kind == "local_fractal" else 1.0
        return c * hx ** (e - 1.0) * float(dfn(np.array(x)))
    c = coefficient(config.order, config.coeff_mode, windowed=True)
    hlo = float(fn(np.array(x - w)))
    if kind == "fractal_function_window":
        a = config.order
        return c * (hx**a - hlo**a) / a
    if kind == "caputo_like_window":
        a = config.order
        return c * (hx - hlo) ** a / a
    if kind == "caputo":
        nu = config.order
        p = 1.0 - nu
        if name == "t":
            return w**p / math.gamma(2.0 - nu)
        if name == "t2":
            return (2 * x * w**p / p - 2 * w ** (p + 1) / (p + 1)) / math.gamma(1.0 - nu)
        if name == "power" and abs(w - x) < 1e-15:
            q = float(arg)
            return math.gamma(q + 1) / math.gamma(q + 1 - nu) * x ** (q - nu)
        return None
    if kind == "fractal_space_window":
        p = 1.0 - config.order
        if name == "t":
            return c * w ** (p + 1) / (p + 1)
        if name == "t2":
            return c * (2 * x * w ** (p + 1) / (p + 1) - 2 * w ** (p + 2) / (p + 2))
        if name == "exp" and p == 0.0:
            return c * (hx - hlo)
    return None


# --------------------------------------------------------------------------
# subcommands


def cmd_set(args) -> int:
    ifs = _load_ifs(args)
    iset = build_prefractal(ifs, args.level)
    out = args.out_dir / (args.out or "set.csv")
    iset.to_csv(out)
    _finish(args, "set", {"ifs": [list(m) for m in ifs.maps], "level": args.level}, [out],
            [args.ifs_file] if args.ifs_file else [])
    print(f"wrote {len(iset)} intervals to {out}")
    return 0


def cmd_staircase(args) -> int:
    iset, ifs = _load_set(args)
    alpha = args.alpha
    if alpha is None:
        if ifs is None:
            raise ValidationError("--alpha is required with --set-file")
        alpha = similarity_dimension(ifs)
    lo, hi, n = args.grid
    grid = np.linspace(float(lo), float(hi), int(n))
    sf = staircase(iset, alpha, args.delta, args.a0, grid, args.origin)
    out = args.out_dir / (args.out or "staircase.csv")
    meta = args.out_dir / (Path(out).stem + ".json")
    sf.to_csv(out)
    params = {"alpha": alpha, "delta": args.delta, "a0": args.a0, "origin": args.origin,
              "grid": {"lo": float(lo), "hi": float(hi), "n": int(n), "kind": "uniform"},
              "n_intervals": len(iset)}
    _write_json(meta, params)
    _finish(args, "staircase", params, [out, meta], [args.set_file] if args.set_file else [])
    print(f"S({format_float(grid[-1])}) = {format_float(sf.values[-1])}")
    return 0


def cmd_dim(args) -> int:
    iset, _ = _load_set(args)
    if args.deltas:
        deltas = args.deltas
    else:
        base, kmin, kmax = args.ladder
        deltas = [float(base) ** -k for k in range(int(kmin), int(kmax) + 1)]
    est = box_counting_dimension(iset, deltas, args.origin)
    out = args.out_dir / (args.out or "dim.json")
    est.to_json(out)
    _finish(args, "dim", {"deltas": list(deltas), "origin": args.origin}, [out])
    print(f"alpha_hat = {format_float(est.alpha_hat)} +/- {format_float(est.stderr)}")
    return 0


def cmd_derive(args) -> int:
    cfg = _config_from_flags(args)
    xs = _probe_points(args)
    if args.grid is not None:
        lo, hi, n = float(args.grid[0]), float(args.grid[1]), int(args.grid[2])
    else:
        lo, hi, n = _grid_for(xs, cfg.window, args.step)
    h = _sample_fn(args.fn, lo, hi, n)
    values = [evaluate(cfg, h, float(x)) for x in xs]
    out = args.out_dir / (args.out or "derive.csv")
    with open(out, "w") as fh:
        fh.write("x,value\n")
        for x, v in zip(xs, values):
            fh.write(f"{format_float(x)},{format_float(v)}\n")
    _finish(args, "derive", {"config": cfg.to_dict(), "fn": args.fn,
                             "grid": {"lo": lo, "hi": hi, "n": n}}, [out])
    for x, v in zip(xs, values):
        print(f"{format_float(x)},{format_float(v)}")
    return 0


def cmd_fit(args) -> int:
    data = np.genfromtxt(args.data, delimiter=",", names=True)
    names = data.dtype.names
    xs, ys = data[names[0]], data[names[1]]
    keep = xs > 0
    if args.exclude_zero:
        keep &= ys != 0
    methods = ["nonlinear_ls", "loglog_ls"] if args.method == "both" else [args.method]
    fits = {m: fit_power_law(xs[keep], ys[keep], m).to_dict() for m in methods}
    out = args.out_dir / (args.out or "fit.json")
    _write_json(out, {"data": str(args.data), "fits": fits})
    _finish(args, "fit", {"methods": methods, "exclude_zero": args.exclude_zero}, [out], [args.data])
    for m, f in fits.items():
        print(f"{m}: a={format_float(f['a'])} b={format_float(f['b'])}")
    return 0


def cmd_compare(args) -> int:
    configs = [parse_config(c) for c in args.config]
    xs = _probe_points(args)
    window = max(c.window for c in configs)
    if args.grid is not None:
        lo, hi, n = float(args.grid[0]), float(args.grid[1]), int(args.grid[2])
    else:
        lo, hi, n = _grid_for(xs, window, args.step)
    h = _sample_fn(args.fn, lo, hi, n)
    report = compare_operators(h, configs, xs)
    report.metadata.update({"fn": args.fn, "grid": {"lo": lo, "hi": hi, "n": n}})
    csv_out = args.out_dir / (args.out or "compare.csv")
    json_out = args.out_dir / (Path(csv_out).stem + ".json")
    report.to_csv(csv_out)
    report.to_json(json_out)
    _finish(args, "compare", report.metadata, [csv_out, json_out])
    for key, s in report.summary.items():
        print(f"{key}: mean={format_float(s['mean'])} max_dev={format_float(s['max_deviation'])}")
    if report.failures:
        log.warning("%d cell(s) failed; see %s", len(report.failures), json_out)
    return 0


def cmd_converge(args) -> int:
    cfg = _config_from_flags(args)
    x = float(args.x[0]) if args.x else 1.0
    oracle = oracle_value(cfg, args.fn, x)
    if oracle is None:
        raise ValidationError(f"no closed-form oracle for {cfg.kind} on {args.fn}")
    span = cfg.window if cfg.window > 0 else 1.0

    def make_h(n: int) -> SampledFunction:
        step = span / n
        return _sample_fn(args.fn, x - span - 2 * step, x + 2 * step, n + 5)

    rows = convergence_study(make_h, cfg, args.mesh, oracle, x)
    csv_out = args.out_dir / (args.out or "converge.csv")
    json_out = args.out_dir / (Path(csv_out).stem + ".json")
    svg_out = args.out_dir / (Path(csv_out).stem + ".svg")
    convergence_to_csv(rows, csv_out)
    _write_json(json_out, {"config": cfg.to_dict(), "fn": args.fn, "x": x, "oracle": oracle,
                           "rows": [r.__dict__ for r in rows]})
    plot_convergence([r.n for r in rows], [max(r.error, 1e-300) for r in rows], svg_out,
                     title=cfg.label, timestamp=not args.no_timestamp)
    _finish(args, "converge", {"config": cfg.to_dict(), "fn": args.fn, "x": x, "mesh": args.mesh},
            [csv_out, json_out, svg_out])
    for r in rows:
        print(f"n={r.n} error={r.error:.3e} order={r.order:.3f}")
    return 0


def run_fig1(level: int = 4, delta: float = 0.01, grid_points: int = 1001, origin: float = 0.0) -> dict:
    """Cantor-set staircase with both power-law fits; returns a result dict."""
    ifs = IfsSpec.cantor()
    alpha = similarity_dimension(ifs)
    iset = build_prefractal(ifs, level)
    grid = np.linspace(0.0, 1.0, grid_points)
    sf = staircase(iset, alpha, delta, 0.0, grid, origin)
    keep = (sf.grid > 0) & (sf.values > 0)
    fits = {m: fit_power_law(sf.grid[keep], sf.values[keep], m) for m in ("nonlinear_ls", "loglog_ls")}
    b = fits["nonlinear_ls"].b
    lo, hi = FIG1_INTERVAL
    return {
        "staircase": sf,
        "fits": fits,
        "alpha": alpha,
        "b": b,
        "passed": lo <= b <= hi,
        "parameters": {"ifs": "cantor", "level": level, "delta": delta, "alpha": alpha,
                       "a0": 0.0, "origin": origin,
                       "grid": {"lo": 0.0, "hi": 1.0, "n": grid_points, "kind": "uniform"},
                       "fit_domain": "x in (0, 1], S > 0"},
    }


def cmd_fig1(args) -> int:
    t0 = time.perf_counter()
    res = run_fig1(args.level, args.delta, args.grid_points, args.origin)
    sf, fits = res["staircase"], res["fits"]
    csv_out = args.out_dir / "fig1_staircase.csv"
    json_out = args.out_dir / "fig1_fit.json"
    svg_out = args.out_dir / "fig1.svg"
    sf.to_csv(csv_out)
    lo, hi = FIG1_INTERVAL
    _write_json(json_out, {
        "parameters": res["parameters"],
        "fits": {m: f.to_dict() for m, f in fits.items()},
        "b_nonlinear": fits["nonlinear_ls"].b,
        "b_loglog": fits["loglog_ls"].b,
        "reference_dimension": FIG1_REFERENCE_DIM,
        "acceptance": {"interval": [lo, hi], "passed": res["passed"]},
    })
    plot_staircase_fit(sf.grid, sf.values, {"nonlinear": fits["nonlinear_ls"], "log-log": fits["loglog_ls"]},
                       svg_out, title=f"Cantor set, level {args.level}, $\\delta={args.delta:g}$",
                       timestamp=not args.no_timestamp)
    _finish(args, "fig1", res["parameters"], [csv_out, json_out, svg_out])
    elapsed = time.perf_counter() - t0
    b = fits["nonlinear_ls"].b
    print(f"b_nonlinear = {b:.6f}  b_loglog = {fits['loglog_ls'].b:.6f}  alpha = {res['alpha']:.6f}")
    status = "PASS" if res["passed"] else "FAIL"
    where = "in" if lo <= b <= hi else "outside"
    print(f"{status}: nonlinear exponent {b:.4f} {where} [{lo}, {hi}] ({elapsed:.2f} s)")
    return 0


def cmd_verify(args) -> int:
    results = verify_manifest(args.manifest)
    bad = 0
    for path, ok, detail in results:
        print(f"{'OK ' if ok else 'BAD'} {path}: {detail}")
        bad += not ok
    return 0 if bad == 0 else 1


# --------------------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--out-dir", type=Path, default=default if suppress else Path("."),
                   help="directory for outputs and manifests (default .)")
    p.add_argument("--seedless", action="store_true", default=default if suppress else False,
                   help="reserved: the toolkit uses no RNG")
    p.add_argument("--no-timestamp", action="store_true", default=default if suppress else False,
                   help="omit timestamps so outputs hash identically across runs")


def _operator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--op", required=True, choices=sorted(OP_ALIASES))
    p.add_argument("--fn", required=True, help="t, t2, exp, qexp:<q>, power:<p> or csv:<path>")
    p.add_argument("--alpha", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--window", type=float, default=0.0)
    p.add_argument("--coeff", default="full", choices=["full", "over_alpha", "unit"])
    p.add_argument("--quad", choices=["analytic_substitution", "graded_mesh", "trapezoid", "l1"])


def _probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--x-range", nargs=3, metavar=("A", "B", "N"))
    p.add_argument("--step", type=float, help="sample spacing (default window/4096)")
    p.add_argument("--grid", nargs=3, metavar=("LO", "HI", "N"), help="explicit sample grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraktal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("set", help="build a prefractal and write its intervals")
    _add_set_source(p, with_file=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_set)

    p = sub.add_parser("staircase", help="staircase function of a set on a grid")
    _add_set_source(p)
    p.add_argument("--alpha", type=float, help="dimension (default: similarity dimension of the IFS)")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--origin", type=float, default=0.0)
    p.add_argument("--grid", nargs=3, default=["0", "1", "1001"], metavar=("LO", "HI", "N"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_staircase)

    p = sub.add_parser("dim", help="box-counting dimension estimate")
    _add_set_source(p)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--ladder", nargs=3, default=["3", "1", "6"], metavar=("BASE", "KMIN", "KMAX"),
                   help="deltas BASE**-k for k in [KMIN, KMAX] (default 3 1 6)")
    p.add_argument("--origin", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("derive", help="evaluate one operator on a built-in function")
    _operator_flags(p)
    _probe_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("fit", help="fit y = a x^b to a two-column CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="both", choices=["nonlinear_ls", "loglog_ls", "both"])
    p.add_argument("--keep-zero", dest="exclude_zero", action="store_false",
                   help="keep y == 0 rows (default drops them)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="tabulate several operators and their ratios")
    p.add_argument("--fn", required=True)
    p.add_argument("--config", action="append", required=True,
                   help="kind:order=..,window=..,coeff=..,quad=.. (repeatable)")
    _probe_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("converge", help="error against a closed form under mesh refinement")
    _operator_flags(p)
    p.add_argument("--x", type=float, nargs=1)
    p.add_argument("--mesh", type=int, nargs="+", default=[256, 512, 1024, 2048, 4096])
    p.add_argument("--out")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("fig1", help="Cantor staircase with power-law fits")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--grid-points", type=int, default=1001)
    p.add_argument("--origin", type=float, default=0.0)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("verify", help="re-hash the outputs listed in a manifest")
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=cmd_verify)

    for action in sub.choices.values():
        _global_flags(action, suppress=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = ["fraktal", *argv]
    if args.command != "verify":
        args.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except (FraktalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
