"""Self-contained SVG charts: prior series, burst grid, cost curves."""

from __future__ import annotations

from html import escape
from typing import Sequence

from .costs import ClassifierPoint, DominanceInterval, PcfRange, expected_cost
from .drift import TermWeekMatrix, WeekSeries

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
STAMP = "<!-- spamdrift svg -->"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        STAMP,
        f"<title>{escape(title)}</title>",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>", ""])


def _axes(x0, y0, w, h, y_ticks: Sequence[float], y_lo: float, y_hi: float) -> list[str]:
    out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>']
    for t in y_ticks:
        y = y0 + h - (t - y_lo) / (y_hi - y_lo) * h
        out.append(f'<line x1="{x0 - 4}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end">{t:g}</text>')
    return out


def prior_chart(series: WeekSeries, title: str = "Weekly p(spam)") -> str:
    """Line chart of the weekly prior; undefined weeks break the line."""
    x0, y0, w, h = 50, 30, 640, 260
    n = max(len(series), 2)
    body = _axes(x0, y0, w, h, [0, 0.25, 0.5, 0.75, 1.0], 0.0, 1.0)
    segments: list[list[str]] = [[]]
    for i, e in enumerate(series):
        if e.p_spam is None:
            segments.append([])
            continue
        x = x0 + i / (n - 1) * w
        y = y0 + h - e.p_spam * h
        segments[-1].append(f"{x:.2f},{y:.2f}")
    for seg in segments:
        if len(seg) > 1:
            body.append(f'<polyline fill="none" stroke="{PALETTE[0]}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        elif seg:
            x, y = seg[0].split(",")
            body.append(f'<circle cx="{x}" cy="{y}" r="2" fill="{PALETTE[0]}"/>')
    for i, e in enumerate(series):
        if i % max(1, len(series) // 13) == 0:
            x = x0 + i / (n - 1) * w
            body.append(f'<text x="{x:.2f}" y="{y0 + h + 14}" text-anchor="middle">{e.week_index}</text>')
    body.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 30}" text-anchor="middle">ISO week</text>')
    return _svg(x0 + w + 20, y0 + h + 40, body, title)


def burst_chart(m: TermWeekMatrix, title: str = "Term frequency and bursts") -> str:
    """One row per term, one column per week; bar height follows the weekly
    count relative to the row maximum and burst cells carry a crossed box."""
    cell_w, cell_h, left, top = 12, 18, 110, 30
    body = []
    for i, term in enumerate(m.terms):
        y = top + i * cell_h
        body.append(f'<text x="{left - 6}" y="{y + cell_h - 5}" text-anchor="end">{escape(term)}</text>')
        row_max = max(int(m.observed[i].max()), 1)
        for j in range(len(m.weeks)):
            x = left + j * cell_w
            o = int(m.observed[i, j])
            if o:
                bh = (cell_h - 4) * o / row_max
                body.append(f'<rect x="{x + 2}" y="{y + cell_h - 2 - bh:.2f}" width="{cell_w - 4}" '
                            f'height="{bh:.2f}" fill="#888"/>')
            if m.burst is not None and m.burst[i, j]:
                x1, y1, x2, y2 = x + 1, y + 1, x + cell_w - 1, y + cell_h - 1
                body.append(
                    f'<g class="burst" stroke="{PALETTE[1]}" fill="none">'
                    f'<rect x="{x1}" y="{y1}" width="{cell_w - 2}" height="{cell_h - 2}"/>'
                    f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>'
                    f'<line x1="{x1}" y1="{y2}" x2="{x2}" y2="{y1}"/></g>')
    bottom = top + len(m.terms) * cell_h
    for j, (_, week) in enumerate(m.weeks):
        if j % 4 == 0:
            body.append(f'<text x="{left + j * cell_w + cell_w / 2}" y="{bottom + 12}" '
                        f'text-anchor="middle" font-size="9">{week}</text>')
    return _svg(left + len(m.weeks) * cell_w + 20, bottom + 24, body, title)


def cost_curve_chart(points: Sequence[ClassifierPoint], r: PcfRange | None = None,
                     dominance: Sequence[DominanceInterval] = (), grid: int = 200,
                     title: str = "Cost curves") -> str:
    x0, y0, w, h = 50, 30, 520, 320
    body = []
    if r is not None:
        body.append(f'<rect x="{x0 + r.lo * w:.2f}" y="{y0}" width="{max(r.span * w, 0.5):.2f}" '
                    f'height="{h}" fill="#f2e6b8"/>')
    body += _axes(x0, y0, w, h, [0, 0.25, 0.5, 0.75, 1.0], 0.0, 1.0)
    for t in (0, 0.25, 0.5, 0.75, 1.0):
        body.append(f'<text x="{x0 + t * w:.2f}" y="{y0 + h + 14}" text-anchor="middle">{t:g}</text>')
    # trivial classifiers: always-legit (cost = PCF) and always-spam (cost = 1 - PCF)
    body.append(f'<line x1="{x0}" y1="{y0 + h}" x2="{x0 + w}" y2="{y0}" stroke="#bbb" stroke-dasharray="4 3"/>')
    body.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + w}" y2="{y0 + h}" stroke="#bbb" stroke-dasharray="4 3"/>')
    for k, p in enumerate(points):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(
            f"{x0 + x * w:.2f},{y0 + h - expected_cost(p, x) * h:.2f}"
            for x in (i / (grid - 1) for i in range(grid)))
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        body.append(f'<text x="{x0 + w + 6}" y="{y0 + 14 + 14 * k}" fill="{colour}">{escape(p.name)}</text>')
    for iv in dominance:
        body.append(f'<line class="crossover" x1="{x0 + iv.hi * w:.2f}" y1="{y0}" '
                    f'x2="{x0 + iv.hi * w:.2f}" y2="{y0 + h}" stroke="#555" stroke-width="0.5"/>')
    body.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 30}" text-anchor="middle">PCF(spam)</text>')
    return _svg(x0 + w + 120, y0 + h + 40, body, title)


def eval_chart(rows: Sequence[dict], title: str = "Weekly error rates") -> str:
    """fp_rate and fn_rate per week from eval.csv-style records."""
    x0, y0, w, h = 50, 30, 640, 260
    body = _axes(x0, y0, w, h, [0, 0.25, 0.5, 0.75, 1.0], 0.0, 1.0)
    n = max(len(rows), 2)
    for k, key in enumerate(("fp_rate", "fn_rate")):
        pts = [f"{x0 + i / (n - 1) * w:.2f},{y0 + h - r[key] * h:.2f}"
               for i, r in enumerate(rows) if r[key] is not None]
        if pts:
            body.append(f'<polyline fill="none" stroke="{PALETTE[k]}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        body.append(f'<text x="{x0 + w - 60}" y="{y0 + 14 + 14 * k}" fill="{PALETTE[k]}">{key}</text>')
    return _svg(x0 + w + 20, y0 + h + 40, body, title)
