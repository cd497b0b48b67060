"""Minimal static SVG line charts.

Each marker carries ``data-x``/``data-y`` attributes with the exact values
it was drawn from, so a chart can be checked against its CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
DASHES = ["", "6,3", "2,2", "8,3,2,3"]


@dataclass
class Series:
    label: str
    x: list
    y: list


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    logx: bool = False
    logy: bool = False


def _fmt(v):
    return repr(float(v))


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        step = max(1, (b - a) // 6)
        return [10.0 ** e for e in range(a, b + 1, step)]
    if hi == lo:
        return [lo]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _tick_label(v):
    return f"{v:.3g}"


def _panel(p: Panel, x0: float, y0: float, w: float, h: float) -> list[str]:
    left, right, top, bottom = 70, 170, 30, 45
    pw, ph = w - left - right, h - top - bottom
    pts = [(x, y) for s in p.series for x, y in zip(s.x, s.y)
           if math.isfinite(x) and math.isfinite(y)
           and (not p.logx or x > 0) and (not p.logy or y > 0)]
    out = [f'<g transform="translate({x0},{y0})">',
           f'<text x="{left + pw / 2}" y="18" text-anchor="middle" font-size="14">'
           f'{escape(p.title)}</text>']
    if not pts:
        out.append(f'<text x="{left + pw / 2}" y="{top + ph / 2}" text-anchor="middle">'
                   'no finite data</text></g>')
        return out
    tx = (lambda v: math.log10(v)) if p.logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if p.logy else (lambda v: v)
    xs = [tx(x) for x, _ in pts]
    ys = [ty(y) for _, y in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    if yhi == ylo:
        pad = abs(ylo) * 0.1 or 1.0
        ylo, yhi = ylo - pad, yhi + pad
    ypad = (yhi - ylo) * 0.05
    ylo, yhi = ylo - ypad, yhi + ypad

    def px(v):
        return left + (tx(v) - xlo) / (xhi - xlo) * pw

    def py(v):
        return top + ph - (ty(v) - ylo) / (yhi - ylo) * ph

    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
               'fill="none" stroke="#000"/>')
    xr = (10 ** xlo, 10 ** xhi) if p.logx else (xlo, xhi)
    yr = (10 ** ylo, 10 ** yhi) if p.logy else (ylo, yhi)
    for v in _ticks(*xr, p.logx):
        if xr[0] <= v <= xr[1]:
            X = px(v)
            out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="#000"/>')
            out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle" '
                       f'font-size="11">{_tick_label(v)}</text>')
    for v in _ticks(*yr, p.logy):
        if yr[0] <= v <= yr[1]:
            Y = py(v)
            out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="#000"/>')
            out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end" '
                       f'font-size="11">{_tick_label(v)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{h - 8}" text-anchor="middle" '
               f'font-size="12">{escape(p.xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(p.ylabel)}</text>')

    for i, s in enumerate(p.series):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[(i // len(PALETTE)) % len(DASHES)]
        good = [(x, y) for x, y in zip(s.x, s.y)
                if math.isfinite(x) and math.isfinite(y)
                and (not p.logx or x > 0) and (not p.logy or y > 0)]
        out.append(f'<g class="series" data-label="{escape(s.label)}">')
        if len(good) > 1:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in good)
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"{dash_attr}/>')
        for x, y in good:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}" '
                       f'data-x="{_fmt(x)}" data-y="{_fmt(y)}"/>')
        out.append("</g>")
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}" font-size="11">'
                   f'{escape(s.label)}</text>')
    out.append("</g>")
    return out


def render(panels: list[Panel], width: int = 720, panel_height: int = 360) -> str:
    height = panel_height * len(panels)
    parts = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="#fff"/>']
    for i, p in enumerate(panels):
        parts.extend(_panel(p, 0, i * panel_height, width, panel_height))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
