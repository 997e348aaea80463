"""Static SVG figures written directly as polylines and text (no plotting library)."""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

import mpmath
from mpmath import mpf

from .series import CoefficientSeries, rescaled

__all__ = ["SvgPlot", "emit_plot", "fig1_points", "fig2_points", "fig3_points"]

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


class SvgPlot:
    """Minimal x/y plot on a fixed canvas."""

    def __init__(self, xlim, ylim, title="", xlabel="", ylabel="", frame=None):
        (self.x0, self.x1), (self.y0, self.y1) = xlim, ylim
        # drawing area (left, top, right, bottom) in pixels
        self.frame = frame or (MARGIN["left"], MARGIN["top"],
                               WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"])
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1
        self.items = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x, y):
        left, top, right, bottom = self.frame
        return (left + (x - self.x0) / (self.x1 - self.x0) * (right - left),
                top + (self.y1 - y) / (self.y1 - self.y0) * (bottom - top))

    def line(self, pts, color=COLORS[0], dash=None, width=1.5):
        pts = [self.px(x, y) for x, y in pts]
        d = f' stroke-dasharray="{dash}"' if dash else ""
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        self.items.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{d} points="{path}"/>')

    def points(self, pts, color=COLORS[0], r=2.5):
        for x, y in pts:
            cx, cy = self.px(x, y)
            self.items.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r}" fill="{color}"/>')

    def band(self, lower, upper, color="#cccccc"):
        pts = [self.px(x, y) for x, y in lower] + [self.px(x, y) for x, y in reversed(upper)]
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        self.items.append(f'<polygon fill="{color}" fill-opacity="0.5" stroke="none" points="{path}"/>')

    def label(self, x, y, text, color="#000000"):
        cx, cy = self.px(x, y)
        self.items.append(f'<text x="{cx:.2f}" y="{cy:.2f}" font-size="11" fill="{color}">{escape(text)}</text>')

    def _ticks(self, lo, hi):
        span = hi - lo
        step = 10 ** math.floor(math.log10(span / 5)) if span > 0 else 1
        for mult in (1, 2, 5, 10):
            if span / (step * mult) <= 8:
                step *= mult
                break
        first = math.ceil(lo / step) * step
        n = int((hi - first) / step + 1e-9) + 1
        return [first + i * step for i in range(n)]

    def elements(self, clip_id="area") -> list:
        """SVG elements of this panel (axes, labels and clipped data)."""
        left, top, right, bottom = self.frame
        out = [f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               'fill="none" stroke="black"/>']
        for t in self._ticks(self.x0, self.x1):
            x, _ = self.px(t, self.y0)
            out.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{bottom + 18}" font-size="11" text-anchor="middle">{t:g}</text>')
        yt = self._ticks(self.y0, self.y1)
        decimals = max(0, -math.floor(math.log10(yt[1] - yt[0]))) if len(yt) > 1 else 3
        for t in yt:
            _, y = self.px(self.x0, t)
            out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{t:.{decimals}f}</text>')
        out.append(f'<text x="{(left + right) / 2}" y="{bottom + 36}" font-size="13" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        ymid, xlab = (top + bottom) / 2, left - 52
        out.append(f'<text x="{xlab}" y="{ymid}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 {xlab} {ymid})">{escape(self.ylabel)}</text>')
        out.append(f'<text x="{(left + right) / 2}" y="{top - 10}" font-size="14" '
                   f'text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<clipPath id="{clip_id}"><rect x="{left}" y="{top}" width="{right - left}" '
                   f'height="{bottom - top}"/></clipPath><g clip-path="url(#{clip_id})">')
        out.extend(self.items)
        out.append("</g>")
        return out

    def render(self) -> str:
        return _document([self], WIDTH, HEIGHT)


def _document(panels, width, height, title="") -> str:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="20" font-size="15" text-anchor="middle">{escape(title)}</text>')
    for i, p in enumerate(panels):
        out.extend(p.elements(f"area{i}"))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _limits(values, pad=0.05):
    lo, hi = min(values), max(values)
    span = hi - lo or abs(hi) or 1.0
    return lo - pad * span, hi + pad * span


# ---------------------------------------------------------------------------
# data extraction (also used by the tests)


def fig1_points(series: CoefficientSeries, a_t, nu=Fraction(-5, 2)) -> list:
    """(m, |c_m| / (m!^2 a^m (m+1)^nu)) for every stored m."""
    return [(m, float(v)) for m, v in enumerate(rescaled(series, a_t, nu))]


def fig2_points(t: CoefficientSeries, N: int, scale, max_M: int = 20) -> list:
    """(M, E-units partial sum of the first M terms)."""
    with mpmath.workdps(40):
        delta = 1 / (mpf(N) + mpf(1) / 2) ** 2
        acc, out = mpf(0), []
        for M in range(1, max_M + 1):
            acc += t.coeffs[M - 1] * delta ** (M - 1)
            out.append((M, float(scale * acc)))
    return out


def fig3_points(records) -> dict:
    """log10 |Delta_N|, log10 sigma and the reference -pi N / ln 10."""
    rows = sorted(records, key=lambda r: r.N)
    return {
        "delta": [(r.N, float(mpmath.log10(abs(r.Delta)))) for r in rows if r.Delta != 0],
        "sigma": [(r.N, float(mpmath.log10(r.sigma))) for r in rows if r.sigma > 0],
        "reference": [(r.N, -math.pi * r.N / math.log(10)) for r in rows],
    }


# ---------------------------------------------------------------------------


def emit_plot(data, kind: str, path, a_t=None) -> Path:
    """Write one of the figures as SVG.

    ``fig1``: ``data`` is a CoefficientSeries and ``a_t`` its growth constant.
    ``fig2``: ``data`` is ``(records, t)`` with records for N <= 3.
    ``fig3``: ``data`` is a sequence of comparison records.
    """
    from .experiment import energy_scale

    path = Path(path)
    if kind == "fig1":
        if a_t is None:
            raise ValueError("fig1 needs the growth constant a_t")
        pts = fig1_points(data, a_t)
        if not pts:
            raise ValueError("no data")
        plot = SvgPlot(_limits([p[0] for p in pts]), _limits([p[1] for p in pts]),
                       "Rescaled expansion coefficients", "m", "|t_m| / (m!^2 a^m (m+1)^(-5/2))")
        plot.points([p for p in pts if p[0] % 2 == 0], COLORS[0])
        plot.points([p for p in pts if p[0] % 2 == 1], COLORS[1])
    elif kind == "fig2":
        records, t = data
        records = sorted((r for r in records if r.N <= 3), key=lambda r: r.N)
        if not records:
            raise ValueError("no data")
        cols = 2 if len(records) > 1 else 1
        rows = math.ceil(len(records) / cols)
        pw, ph = 420, 300
        panels = []
        for i, r in enumerate(records):
            pts = fig2_points(t, r.N, energy_scale(r.delta), max_M=20)
            exact, borel = float(r.E_exact), float(r.E_borel)
            half = 4 * max(abs(exact - borel), 1e-12)
            left, top = 100 + (i % cols) * pw, 60 + (i // cols) * ph
            plot = SvgPlot((0, 21), (exact - half, exact + half), f"N = {r.N}", "M",
                           "E", frame=(left, top, left + pw - 120, top + ph - 80))
            plot.line([(0, exact), (21, exact)], "#000000", width=1)
            plot.line([(0, borel), (21, borel)], COLORS[1], dash="6,3")
            plot.line(pts, COLORS[0], width=1)
            plot.points(pts, COLORS[0])
            plot.label(0.5, exact + 0.85 * half, "solid: exact, dashed: Borel", "#444444")
            panels.append(plot)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(_document(panels, cols * pw + 40, rows * ph + 40,
                                  "Partial sums of the WKB series versus truncation order"))
        return path
    elif kind == "fig3":
        pts = fig3_points(data)
        if not pts["delta"]:
            raise ValueError("no data")
        ys = [y for _, y in pts["delta"] + pts["reference"] + pts["sigma"]]
        xs = [x for x, _ in pts["delta"]]
        plot = SvgPlot(_limits(xs), _limits(ys), "log10 |E_exact - E_WKB|", "N", "log10 |Delta_N|")
        if pts["sigma"]:
            plot.band([(x, y - 0.5) for x, y in pts["sigma"]], [(x, y + 0.5) for x, y in pts["sigma"]])
        plot.line(pts["reference"], COLORS[2], dash="6,3")
        lx, ly, dy = plot.x0 + 0.55 * (plot.x1 - plot.x0), plot.y1 - 0.08 * (plot.y1 - plot.y0), 0.06 * (plot.y1 - plot.y0)
        plot.label(lx, ly, "solid: log10 |Delta_N|", COLORS[0])
        plot.label(lx, ly - dy, "dashed: -pi N / ln 10", COLORS[2])
        if pts["sigma"]:
            plot.label(lx, ly - 2 * dy, "grey band: log10 sigma", "#777777")
        plot.line(pts["delta"], COLORS[0])
        plot.points(pts["delta"], COLORS[0])
    else:
        raise ValueError(f"unknown figure kind {kind!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plot.render())
    return path
