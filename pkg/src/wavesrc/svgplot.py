"""Static SVG line charts of sweep results.

Output depends only on the records: coordinates are printed with a fixed
number of decimals and series appear in sorted order, so identical input
gives identical bytes.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 150, "top": 40, "bottom": 55}
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


class _Axis:
    def __init__(self, lo: float, hi: float, log: bool, start: float, length: float, flip: bool = False):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.lo, self.hi, self.log = lo - pad, hi + pad, log
        self.start, self.length, self.flip = start, length, flip

    def __call__(self, v: float) -> float:
        u = math.log10(v) if self.log else v
        frac = (u - self.lo) / (self.hi - self.lo)
        return self.start + self.length * ((1 - frac) if self.flip else frac)

    def ticks(self) -> list[float]:
        if self.log:
            return [10.0 ** e for e in range(math.ceil(self.lo), math.floor(self.hi) + 1)]
        return list(np.linspace(self.lo, self.hi, 5)[1:-1])


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.3g}"


def line_chart(series: list[dict], title: str, xlabel: str, ylabel: str, logx: bool = False,
               logy: bool = True) -> str:
    """SVG 1.1 document with one polyline per series.

    Each series is ``{"label": str, "x": [...], "y": [...], "dashed": bool}``.
    Points that cannot be drawn (NaN, or nonpositive on a log axis) are
    dropped.
    """
    clean = []
    for s in series:
        pts = [(float(x), float(y)) for x, y in zip(s["x"], s["y"])
               if math.isfinite(x) and math.isfinite(y) and (x > 0 or not logx) and (y > 0 or not logy)]
        clean.append({**s, "pts": pts})
    xs = [p[0] for s in clean for p in s["pts"]] or [1.0]
    ys = [p[1] for s in clean for p in s["pts"]] or [1.0]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    ax = _Axis(min(xs), max(xs), logx, MARGIN["left"], pw)
    ay = _Axis(min(ys), max(ys), logy, MARGIN["top"], ph, flip=True)
    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
           f'font-size="15">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in ax.ticks():
        x = ax(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{MARGIN["top"] + ph}" x2="{_fmt(x)}" y2="{MARGIN["top"] + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{_label(t)}</text>')
    for t in ay.ticks():
        y = ay(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_fmt(y)}" x2="{MARGIN["left"]}" y2="{_fmt(y)}" '
                   'stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{_label(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    legend_x = WIDTH - MARGIN["right"] + 12
    for i, s in enumerate(clean):
        color = COLORS[s.get("color", i) % len(COLORS)]
        dash = ' stroke-dasharray="6,4"' if s.get("dashed") else ""
        if s["pts"]:
            coords = " ".join(f"{_fmt(ax(x))},{_fmt(ay(y))}" for x, y in s["pts"])
            out.append(f'<polyline class="series" points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="2"{dash}/>')
            for x, y in s["pts"]:
                out.append(f'<circle cx="{_fmt(ax(x))}" cy="{_fmt(ay(y))}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        out.append(f'<line x1="{legend_x}" y1="{ly - 4}" x2="{legend_x + 22}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text class="legend" x="{legend_x + 28}" y="{ly}" font-family="sans-serif" '
                   f'font-size="11">{escape(s["label"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _window_name(problem: str) -> str:
    return "Lambda" if problem == "ip2" else "b"


def emit_plots(records, out_dir, C_fit: float | None = None, power: float = 1.0) -> list[Path]:
    """Write ``error_vs_eps.svg`` and ``error_vs_window.svg`` into ``out_dir``.

    Errors are medians over seeds.  When ``C_fit`` is given, the fitted
    bound (C_fit * shape)^(1/power) is overlaid as dashed lines.
    """
    if not records:
        raise ValueError("no records to plot")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out_dir}: {exc}") from exc
    problem = records[0].problem
    wname = _window_name(problem)
    groups: dict = {}
    shapes: dict = {}
    for r in records:
        groups.setdefault((r.b_or_Lambda, r.epsilon), []).append(r.error_rel_L2)
        shapes[(r.b_or_Lambda, r.epsilon)] = r.shape()
    med = {k: float(np.nanmedian(v)) if np.any(np.isfinite(v)) else float("nan") for k, v in groups.items()}
    windows = sorted({k[0] for k in med})
    eps = sorted({k[1] for k in med})

    def bound(k):
        sh = shapes[k]
        return (C_fit * sh) ** (1.0 / power) if C_fit is not None and math.isfinite(sh) else float("nan")

    s_eps = []
    for i, w in enumerate(windows):
        e_pos = [e for e in eps if e > 0]
        s_eps.append({"label": f"{wname} = {_label(w)}", "x": e_pos, "y": [med[(w, e)] for e in e_pos], "color": i})
    if C_fit is not None:
        for i, w in enumerate(windows):
            e_pos = [e for e in eps if e > 0]
            s_eps.append({"label": f"bound {wname} = {_label(w)}", "x": e_pos, "y": [bound((w, e)) for e in e_pos],
                          "dashed": True, "color": i})
    s_win = []
    for i, e in enumerate(eps):
        s_win.append({"label": f"eps = {_label(e)}", "x": windows, "y": [med[(w, e)] for w in windows], "color": i})
    if C_fit is not None:
        for i, e in enumerate(eps):
            if e > 0:
                s_win.append({"label": f"bound eps = {_label(e)}", "x": windows, "y": [bound((w, e)) for w in windows],
                              "dashed": True, "color": i})
    paths = []
    for name, series, xl, logx in (("error_vs_eps.svg", s_eps, "noise level eps", True),
                                   ("error_vs_window.svg", s_win, wname, False)):
        path = out_dir / name
        svg = line_chart(series, f"{problem}: median relative L2 error", xl, "relative L2 error", logx=logx)
        try:
            path.write_text(svg)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths.append(path)
    return paths
