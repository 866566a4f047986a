"""CSV and SVG emitters for experiment results.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so files round-trip exactly and are byte-stable.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .runner import AggregateCurve, MetricsRecord

RECORD_FIELDS = ("run", "episode", "train_return", "train_steps", "test_metric", "epsilon")
CURVE_FIELDS = ("episode", "mean", "stderr", "n")

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _fmt(value) -> str:
    if isinstance(value, (bool,)):
        raise TypeError("booleans are not valid CSV fields here")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_csv(data: Iterable[MetricsRecord] | AggregateCurve, path: str | Path) -> None:
    """Write records (``records.csv``) or a curve (``curve.csv``) to ``path``."""
    if isinstance(data, AggregateCurve):
        header = CURVE_FIELDS
        rows = zip(data.episode, data.mean, data.stderr, data.n)
    else:
        header = RECORD_FIELDS
        rows = ((getattr(rec, f) for f in RECORD_FIELDS) for rec in data)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_rows(path, expected):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != expected:
            raise ValueError(f"{path}: unexpected header {header}")
        yield from reader


def read_records_csv(path: str | Path) -> list[MetricsRecord]:
    return [
        MetricsRecord(int(r[0]), int(r[1]), float(r[2]), int(r[3]), float(r[4]), float(r[5]))
        for r in _read_rows(path, RECORD_FIELDS)
    ]


def read_curve_csv(path: str | Path) -> AggregateCurve:
    rows = list(_read_rows(path, CURVE_FIELDS))
    return AggregateCurve(
        tuple(int(r[0]) for r in rows),
        tuple(float(r[1]) for r in rows),
        tuple(float(r[2]) for r in rows),
        tuple(int(r[3]) for r in rows),
    )


# -- SVG ----------------------------------------------------------------------

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _points(xs: Sequence[float], ys: Sequence[float]) -> str:
    return " ".join(f"{repr(float(x))},{repr(float(y))}" for x, y in zip(xs, ys))


def _attr(text: str) -> str:
    return escape(text, {'"': "&quot;"})


def _short(v: float) -> str:
    return f"{v:.4g}"


def render_plot(
    curves: Sequence[tuple[str, AggregateCurve]] | dict[str, AggregateCurve],
    path: str | Path,
    *,
    title: str = "",
    ylabel: str = "test metric",
) -> None:
    """Write a standalone SVG of mean curves with +-1 standard error bands.

    Series are drawn inside a group whose transform maps data coordinates to
    the canvas, so ``points`` attributes hold raw (episode, value) pairs.
    """
    items = list(curves.items()) if isinstance(curves, dict) else list(curves)
    if not items:
        raise ValueError("nothing to plot")
    length = len(items[0][1])
    for name, c in items:
        if not (len(c.episode) == len(c.mean) == len(c.stderr)):
            raise ValueError(f"curve {name!r} has columns of different lengths")
        if len(c) != length:
            raise ValueError(f"curve {name!r} has {len(c)} points, expected {length}")
    if length == 0:
        raise ValueError("curves are empty")

    xs = [x for _, c in items for x in c.episode]
    lows = [m - s for _, c in items for m, s in zip(c.mean, c.stderr)]
    highs = [m + s for _, c in items for m, s in zip(c.mean, c.stderr)]
    x0, x1 = _nice_range(min(xs), max(xs))
    y0, y1 = _nice_range(min(lows), max(highs))
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    sx, sy = pw / (x1 - x0), ph / (y1 - y0)
    tx, ty = LEFT - x0 * sx, TOP + ph + y0 * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    # axes
    out.append(f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>')
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        px = LEFT + pw * k / 4
        py = TOP + ph - ph * k / 4
        out.append(f'<text x="{px:.2f}" y="{TOP + ph + 16}" text-anchor="middle">{_short(xv)}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{py + 4:.2f}" text-anchor="end">{_short(yv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">episode</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>'
    )

    out.append(f'<g id="data" transform="matrix({sx!r} 0 0 {-sy!r} {tx!r} {ty!r})">')
    for i, (name, c) in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        upper = [m + s for m, s in zip(c.mean, c.stderr)]
        lower = [m - s for m, s in zip(c.mean, c.stderr)]
        band = _points(list(c.episode) + list(reversed(c.episode)), upper + lower[::-1])
        out.append(
            f'<polygon class="band" data-name="{_attr(name)}" points="{band}" '
            f'fill="{color}" fill-opacity="0.2" stroke="none"/>'
        )
        out.append(
            f'<polyline class="mean" data-name="{_attr(name)}" points="{_points(c.episode, c.mean)}" '
            f'fill="none" stroke="{color}" stroke-width="1.5" vector-effect="non-scaling-stroke"/>'
        )
    out.append("</g>")

    for i, (name, _) in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        ly = TOP + 10 + 18 * i
        lx = WIDTH - RIGHT + 12
        out.append(f'<rect x="{lx}" y="{ly - 9}" width="14" height="10" fill="{color}"/>')
        out.append(f'<text x="{lx + 20}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
