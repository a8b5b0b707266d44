"""Static figures rendered to files with matplotlib's Agg/SVG backends."""

from __future__ import annotations

import datetime as _dt
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt so SVG element ids do not change between runs
_SVG_RC = {"svg.hashsalt": "fraktal", "svg.fonttype": "path"}


def save_figure(fig, path: str | os.PathLike, timestamp: bool = True) -> None:
    """Write ``fig``; with ``timestamp=False`` SVG output is byte-reproducible."""
    metadata = {"Date": _dt.datetime.now().isoformat(timespec="seconds") if timestamp else None}
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, metadata=metadata if str(path).endswith(".svg") else None)
    plt.close(fig)


def plot_staircase_fit(
    x: Sequence[float],
    s: Sequence[float],
    fits: dict,
    path: str | os.PathLike,
    title: str = "",
    timestamp: bool = True,
) -> None:
    """Staircase samples with one fitted ``a x**b`` curve per entry in ``fits``."""
    x = np.asarray(x, dtype=float)
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.plot(x, s, color="tab:blue", lw=1.5, label="mass distribution")
        xf = x[x > 0]
        styles = ["-", "--", ":"]
        colors = ["tab:orange", "tab:green", "tab:red"]
        for i, (name, fit) in enumerate(fits.items()):
            ax.plot(xf, fit(xf), ls=styles[i % 3], color=colors[i % 3], lw=1.2,
                    label=f"{name}: $y={fit.a:.3f}\\,x^{{{fit.b:.3f}}}$")
        ax.set_xlabel("$x$")
        ax.set_ylabel("$S(x)$")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
    save_figure(fig, path, timestamp)


def plot_convergence(ns, errors, path, title: str = "", timestamp: bool = True) -> None:
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.loglog(ns, errors, "o-", color="tab:blue")
        ax.set_xlabel("mesh size $n$")
        ax.set_ylabel("absolute error")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    save_figure(fig, path, timestamp)
