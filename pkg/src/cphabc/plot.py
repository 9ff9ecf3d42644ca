"""Standalone SVG line plots of CSV columns."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 150, 20, 45


def read_csv_columns(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _num(v: float) -> str:
    return f"{v:.6g}"


def line_plot_svg(x, series: dict, log_y: bool = False, x_label: str = "", title: str = "") -> str:
    """SVG text for one polyline per entry of ``series`` (name -> y values)."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    if not ys:
        raise ValueError("nothing to plot")
    for k, y in ys.items():
        if y.shape != x.shape:
            raise ValueError(f"column {k!r} has a different length than the x column")
        if log_y and np.any(y <= 0):
            raise ValueError(f"column {k!r} has non-positive values; cannot use a log axis")
    tr = (lambda y: np.log10(y)) if log_y else (lambda y: y)
    allv = np.concatenate([tr(y) for y in ys.values()])
    y_lo, y_hi = float(allv.min()), float(allv.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return _MT + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{_ML + pw / 2:.2f}" y="14" text-anchor="middle" font-size="12">{escape(title)}</text>')
    for t in _ticks(x_lo, x_hi):
        out.append(f'<line x1="{px(t):.2f}" y1="{_MT + ph}" x2="{px(t):.2f}" y2="{_MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{_MT + ph + 16}" text-anchor="middle" font-size="10">{_num(t)}</text>')
    if log_y:
        yt = [float(k) for k in range(math.ceil(y_lo), math.floor(y_hi) + 1)] or [y_lo]
        label = (lambda t: f"1e{int(t)}") if yt != [y_lo] else _num
    else:
        yt, label = _ticks(y_lo, y_hi), _num
    for t in yt:
        out.append(f'<line x1="{_ML - 4}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 6}" y="{py(t) + 3:.2f}" text-anchor="end" font-size="10">{label(t)}</text>')
    if x_label:
        out.append(f'<text x="{_ML + pw / 2:.2f}" y="{_H - 8}" text-anchor="middle" font-size="11">{escape(x_label)}</text>')
    for i, (name, y) in enumerate(ys.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, tr(y)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _MT + 14 + 16 * i
        out.append(f'<line x1="{_W - _MR + 10}" y1="{ly}" x2="{_W - _MR + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _MR + 35}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_line_plot(csv_path, columns=None, out_path=None, log_y: bool = False, x_column: str | None = None,
                   title: str = "") -> Path:
    """Plot ``columns`` of a CSV against its first (or ``x_column``) column."""
    data = read_csv_columns(csv_path)
    names = list(data)
    x_column = x_column or names[0]
    columns = list(columns) if columns else [n for n in names if n != x_column]
    for c in [x_column, *columns]:
        if c not in data:
            raise KeyError(f"missing column {c!r} in {csv_path}")
    svg = line_plot_svg(data[x_column], {c: data[c] for c in columns}, log_y=log_y, x_label=x_column, title=title)
    out = Path(out_path) if out_path else Path(csv_path).with_suffix(".svg")
    out.write_text(svg)
    return out
