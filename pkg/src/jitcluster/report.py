"""Delimited output and matplotlib figures for the CLI report path.

CSV conventions: header row, ``,`` separator, ``\\n`` line endings, floats
with 17 significant digits (``format(x, ".17g")``) so values round-trip.
Figures are written with volatile metadata stripped, so reruns give
identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STABLE_METADATA = {
    ".png": {"Software": None},
    ".svg": {"Date": None, "Creator": None},
    ".pdf": {"CreationDate": None, "Producer": None, "Creator": None},
}


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def json_text(payload: Mapping[str, Any]) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _save(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = _STABLE_METADATA.get(path.suffix.lower())
    with plt.rc_context({"svg.hashsalt": "jitcluster"}):
        fig.savefig(path, metadata=metadata, dpi=150)
    plt.close(fig)
    return path


def plot_curves(
    curves: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path: str | Path,
    *,
    ylabel: str,
    title: str = "",
    logy: bool = True,
    shade_below: bool = False,
) -> Path:
    """Line plot of one or more ``label -> (p, value)`` curves against p.

    With ``shade_below`` the region under the lowest curve is shaded, as for
    the T2 threshold figures where that region is not sustainable.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    lowest = None
    for label, (xs, ys) in curves.items():
        ax.plot(xs, ys, label=label, lw=1.6)
        if lowest is None or (ys and min(ys) < min(lowest[1])):
            lowest = (xs, ys)
    if shade_below and lowest is not None:
        ax.fill_between(lowest[0], lowest[1], 0.0 if not logy else min(lowest[1]) / 10, alpha=0.15)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("entangling success probability $p$")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_reservoir(
    series: Mapping[str, tuple[Sequence[float], Sequence[float], float, float]],
    path: str | Path,
) -> Path:
    """Required reservoir vs p for each procedure, with the fitted exp(gamma*tau) curve.

    ``series`` maps a label to ``(taus, qs, gamma, intercept)``.
    """
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for label, (taus, qs, gamma, intercept) in series.items():
        ps = [1.0 / t for t in taus]
        line = ax.plot(ps, qs, "o", label=f"{label} ($\\gamma$={gamma:.3g})")[0]
        if taus:
            fine = [min(taus) + k * (max(taus) - min(taus)) / 50 for k in range(51)]
            ax.plot([1.0 / t for t in fine], [math.exp(intercept + gamma * t) for t in fine],
                    color=line.get_color(), lw=1.0)
    ax.set_yscale("log")
    ax.set_xlabel("entangling success probability $p = 1/\\tau$")
    ax.set_ylabel("reservoir size $Q$")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_underflow(rows: Sequence[tuple[float, float]], path: str | Path, reference: float | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-", lw=1.4)
    if reference is not None:
        ax.axhline(reference, ls="--", color="grey", lw=1.0, label="$1/\\alpha$")
        ax.legend(frameon=False)
    ax.set_xlabel("start buffer / $\\beta\\,\\Delta N$")
    ax.set_ylabel("underflow fraction")
    fig.tight_layout()
    return _save(fig, path)
