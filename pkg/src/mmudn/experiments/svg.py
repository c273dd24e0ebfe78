"""Static line-chart SVG output, written as plain text."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .harness import AggregateReport, fmt6

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_chart(series: dict[str, tuple[list[float], list[float]]], title: str, xlabel: str, ylabel: str) -> str:
    """One polyline with markers per series, linear axes, legend on the right."""
    xs = [x for sx, _ in series.values() for x in sx]
    ys = [y for _, sy in series.values() for y in sy if math.isfinite(y)]
    if not xs or not ys:
        raise ValueError("line_chart needs at least one finite point")
    xt = _ticks(min(xs), max(xs))
    yt = _ticks(min(ys), max(ys))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    for v in xt:
        out.append(f'<line x1="{px(v):.1f}" y1="{MARGIN["top"]}" x2="{px(v):.1f}" y2="{MARGIN["top"] + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{px(v):.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{fmt6(v)}</text>')
    for v in yt:
        out.append(f'<line x1="{MARGIN["left"]}" y1="{py(v):.1f}" x2="{MARGIN["left"] + pw}" y2="{py(v):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(v) + 4:.1f}" text-anchor="end">{fmt6(v)}</text>')
    out.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    cy = MARGIN["top"] + ph / 2
    out.append(f'<text x="18" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 18 {cy:.1f})">{escape(ylabel)}</text>')

    for i, (label, (sx, sy)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(x), py(y)) for x, y in zip(sx, sy) if math.isfinite(y)]
        path = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{color}"/>' for a, b in pts)
        ly = MARGIN["top"] + 10 + 18 * i
        lx = MARGIN["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def campaign_charts(report: AggregateReport) -> dict[str, str]:
    """File name to SVG text for the charts matching the campaign."""
    pts = report.points
    charts = {}
    if report.spec.campaign == "element_budget":
        pairs = sorted({(p.M, p.L) for p in pts})
        for field, ylabel, name in (("opt_rate", "worst-UE rate [bit/s/Hz]", "rate_vs_snr.svg"),
                                    ("opt_active", "active ANs", "active_vs_snr.svg")):
            series = {}
            for M, L in pairs:
                sel = sorted((p for p in pts if (p.M, p.L) == (M, L)), key=lambda p: p.snr_db)
                series[f"{M} ANs x {L}"] = ([p.snr_db for p in sel], [getattr(p, field) for p in sel])
            charts[name] = line_chart(series, f"Element budget {report.spec.budget}", "target SNR [dB]", ylabel)
        return charts

    for snr in sorted({p.snr_db for p in pts}):
        suffix = "" if len({p.snr_db for p in pts}) == 1 else f"_{fmt6(snr)}dB"
        at = [p for p in pts if p.snr_db == snr]
        rate, active = {}, {}
        for L in sorted({p.L for p in at}):
            sel = sorted((p for p in at if p.L == L), key=lambda p: p.M)
            m = [p.M for p in sel]
            rate[f"L={L} optimal"] = (m, [p.opt_rate for p in sel])
            rate[f"L={L} baseline"] = (m, [p.base_rate for p in sel])
            active[f"L={L} optimal"] = (m, [p.opt_active for p in sel])
        sel = sorted((p for p in at if p.L == min(q.L for q in at)), key=lambda p: p.M)
        active["baseline"] = ([p.M for p in sel], [p.base_active for p in sel])
        charts[f"rate_vs_m{suffix}.svg"] = line_chart(rate, f"Worst-UE rate, {fmt6(snr)} dB", "ANs (M)",
                                                     "worst-UE rate [bit/s/Hz]")
        charts[f"active_vs_m{suffix}.svg"] = line_chart(active, f"Active ANs, {fmt6(snr)} dB", "ANs (M)", "active ANs")
    return charts
