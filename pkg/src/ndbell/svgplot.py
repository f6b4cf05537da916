"""Tiny self-contained SVG charts (grouped bars and line plots with error bars)."""
from __future__ import annotations

import os
from typing import Sequence
from xml.sax.saxutils import escape

_W, _H = 640, 400
_L, _R, _T, _B = 60, 20, 40, 50
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


def _frame(title: str, ylabel: str, xlabel: str = "") -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<line x1="{_L}" y1="{_H - _B}" x2="{_W - _R}" y2="{_H - _B}" stroke="black"/>',
        f'<line x1="{_L}" y1="{_T}" x2="{_L}" y2="{_H - _B}" stroke="black"/>',
        f'<text x="16" y="{(_H - _B + _T) / 2}" transform="rotate(-90 16 {(_H - _B + _T) / 2})" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">{escape(ylabel)}</text>',
    ]
    if xlabel:
        parts.append(
            f'<text x="{(_L + _W - _R) / 2}" y="{_H - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>'
        )
    return parts


def _y(v: float, lo: float, hi: float) -> float:
    return _H - _B - (v - lo) / (hi - lo) * (_H - _B - _T)


def _x(v: float, lo: float, hi: float) -> float:
    return _L + (v - lo) / (hi - lo) * (_W - _L - _R)


def _y_ticks(lo: float, hi: float, n: int = 5) -> list[str]:
    out = []
    for k in range(n + 1):
        v = lo + (hi - lo) * k / n
        y = _y(v, lo, hi)
        out.append(f'<line x1="{_L - 4}" y1="{y:.1f}" x2="{_L}" y2="{y:.1f}" stroke="black"/>')
        out.append(
            f'<text x="{_L - 7}" y="{y + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.2f}</text>'
        )
    return out


def _legend(names: Sequence[str]) -> list[str]:
    out = []
    for k, name in enumerate(names):
        x = _W - _R - 150
        y = _T + 14 + 16 * k
        out.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" fill="{_COLORS[k % len(_COLORS)]}"/>')
        out.append(f'<text x="{x + 15}" y="{y}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    return out


def bar_chart(
    path: str | os.PathLike,
    categories: Sequence[str],
    series: dict[str, Sequence[float]],
    title: str,
    ylabel: str = "probability",
    ymax: float = 1.0,
) -> None:
    parts = _frame(title, ylabel) + _y_ticks(0.0, ymax)
    n_cat, n_ser = len(categories), len(series)
    slot = (_W - _L - _R) / max(n_cat, 1)
    width = slot * 0.8 / max(n_ser, 1)
    for c, cat in enumerate(categories):
        x0 = _L + slot * c + slot * 0.1
        for s, values in enumerate(series.values()):
            v = float(values[c])
            y = _y(v, 0.0, ymax)
            parts.append(
                f'<rect x="{x0 + s * width:.1f}" y="{y:.1f}" width="{width:.1f}" '
                f'height="{_H - _B - y:.1f}" fill="{_COLORS[s % len(_COLORS)]}"/>'
            )
        parts.append(
            f'<text x="{x0 + slot * 0.4:.1f}" y="{_H - _B + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{escape(cat)}</text>'
        )
    parts += _legend(list(series))
    parts.append("</svg>")
    _write(path, parts)


def line_chart(
    path: str | os.PathLike,
    x: Sequence[float],
    y: Sequence[float],
    yerr: Sequence[float],
    curve_x: Sequence[float],
    curve_y: Sequence[float],
    title: str,
    xlabel: str,
    ylabel: str,
    labels: tuple[str, str] = ("simulation", "analytic"),
    hline: float | None = None,
) -> None:
    lo_x, hi_x = min(min(x), min(curve_x)), max(max(x), max(curve_x))
    if hi_x == lo_x:
        hi_x = lo_x + 1.0
    parts = _frame(title, ylabel, xlabel) + _y_ticks(0.0, 1.0)
    for k in range(6):
        v = lo_x + (hi_x - lo_x) * k / 5
        px = _x(v, lo_x, hi_x)
        parts.append(
            f'<text x="{px:.1f}" y="{_H - _B + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{v:.2f}</text>'
        )
    if hline is not None:
        yh = _y(hline, 0.0, 1.0)
        parts.append(f'<line x1="{_L}" y1="{yh:.1f}" x2="{_W - _R}" y2="{yh:.1f}" stroke="gray" stroke-dasharray="4 3"/>')
    pts = " ".join(f"{_x(a, lo_x, hi_x):.1f},{_y(b, 0.0, 1.0):.1f}" for a, b in zip(curve_x, curve_y))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="{_COLORS[1]}" stroke-width="2"/>')
    for a, b, e in zip(x, y, yerr):
        px, py = _x(a, lo_x, hi_x), _y(b, 0.0, 1.0)
        parts.append(
            f'<line x1="{px:.1f}" y1="{_y(b - e, 0.0, 1.0):.1f}" x2="{px:.1f}" y2="{_y(b + e, 0.0, 1.0):.1f}" stroke="black"/>'
        )
        parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="4" fill="{_COLORS[0]}"/>')
    parts += _legend(list(labels))
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts: list[str]) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
