"""Turn a summary.csv into standalone SVG charts.

Three files land next to the summary: sr.svg, median_l2.svg and mean_pp.svg.
Each plots its metric against the baseline budget N, one polyline per
(Q, p, norm, mode) series. Output is a pure function of the CSV bytes, so
regenerating a report never dirties a results directory.
"""

from __future__ import annotations

import csv
from pathlib import Path

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62.0, 170.0, 22.0, 48.0
PALETTE = ["#1b6ca8", "#c2452d", "#3a8c4f", "#8455a8", "#b0741c", "#3f3f3f"]

CHARTS = [
    ("sr", "success rate (%)", "sr.svg"),
    ("median_l2", "median L2 of successes", "median_l2.svg"),
    ("mean_pp", "mean sparsity gain (%)", "mean_pp.svg"),
]


def read_summary(path) -> list[dict]:
    """Rows of a summary.csv with numeric fields parsed, "" becoming None."""
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for raw in csv.DictReader(text.splitlines()):
        row: dict = dict(raw)
        for key in ("Q", "N", "p", "n"):
            row[key] = int(raw[key])
        for key in ("sr", "median_l2", "median_linf", "mean_pp", "median_queries"):
            row[key] = float(raw[key]) if raw[key] not in (None, "") else None
        rows.append(row)
    return rows


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _series(rows: list[dict], metric: str) -> dict[tuple, list[tuple[float, float]]]:
    out: dict[tuple, list[tuple[float, float]]] = {}
    for row in rows:
        if row[metric] is None:
            continue
        key = (row["Q"], row["p"], row["norm"], row["mode"])
        out.setdefault(key, []).append((float(row["N"]), float(row[metric])))
    for pts in out.values():
        pts.sort()
    return out


def render_chart(rows: list[dict], metric: str, ylabel: str) -> str:
    series = _series(rows, metric)
    if not series:
        raise ValueError(f"summary has no values for {metric}")
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    axis = 'stroke="#444" stroke-width="1"'
    x0, y0 = MARGIN_L, MARGIN_T + plot_h
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0 + plot_w)}" '
                 f'y2="{_fmt(y0)}" {axis}/>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(MARGIN_T)}" x2="{_fmt(x0)}" '
                 f'y2="{_fmt(y0)}" {axis}/>')
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{_fmt(px(t))}" y1="{_fmt(y0)}" x2="{_fmt(px(t))}" '
                     f'y2="{_fmt(y0 + 4)}" {axis}/>')
        parts.append(f'<text x="{_fmt(px(t))}" y="{_fmt(y0 + 18)}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{_fmt(x0 - 4)}" y1="{_fmt(py(t))}" x2="{_fmt(x0)}" '
                     f'y2="{_fmt(py(t))}" {axis}/>')
        parts.append(f'<text x="{_fmt(x0 - 7)}" y="{_fmt(py(t) + 4)}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{_fmt(t)}</text>')
    parts.append(f'<text x="{_fmt(x0 + plot_w / 2)}" y="{_fmt(HEIGHT - 12)}" '
                 f'font-family="sans-serif" font-size="12" text-anchor="middle">'
                 f'baseline budget N</text>')
    parts.append(f'<text x="16" y="{_fmt(MARGIN_T + plot_h / 2)}" font-family="sans-serif" '
                 f'font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 16 {_fmt(MARGIN_T + plot_h / 2)})">{ylabel}</text>')
    for si, (key, pts) in enumerate(sorted(series.items())):
        color = PALETTE[si % len(PALETTE)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="3" '
                         f'fill="{color}"/>')
        q, p, norm_name, mode = key
        ly = MARGIN_T + 14 + 16 * si
        lx = MARGIN_L + plot_w + 12
        parts.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 18)}" '
                     f'y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="1.6"/>')
        parts.append(f'<text x="{_fmt(lx + 23)}" y="{_fmt(ly)}" font-family="sans-serif" '
                     f'font-size="11">Q={q} p={p} {norm_name} {mode}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_report(summary_csv, out_dir=None) -> list[Path]:
    """Render every chart whose metric has data; returns the files written."""
    summary_csv = Path(summary_csv)
    out = Path(out_dir) if out_dir is not None else summary_csv.parent
    rows = read_summary(summary_csv)
    if not rows:
        raise ValueError(f"{summary_csv} has no data rows")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, ylabel, filename in CHARTS:
        try:
            svg = render_chart(rows, metric, ylabel)
        except ValueError:
            continue
        path = out / filename
        path.write_text(svg, encoding="utf-8")
        written.append(path)
    if not written:
        raise ValueError(f"{summary_csv} has no plottable metrics")
    return written
