"""Static SVG rendering for reports: heatmap grid and filtering curves.

Hand-built strings, no plotting dependency; output is deterministic and
diffable, so byte-identical reruns can be asserted in tests.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

CELL_W = 86
CELL_H = 34
LEFT = 150
TOP = 50


def _shade(value: float, lo: float, hi: float) -> str:
    """Light-to-dark ramp; low values (better) render light."""
    if hi <= lo:
        t = 0.5
    else:
        t = (value - lo) / (hi - lo)
    level = int(round(245 - 160 * min(max(t, 0.0), 1.0)))
    return f"rgb({level},{level + 5},255)"


def heatmap_svg(
    methods: list[str],
    estimators: list[str],
    mae: dict[tuple[str, str], float],
    pcc: dict[tuple[str, str], float],
    best: tuple[str, str],
    title: str = "RR estimation error by method and estimator",
) -> str:
    """Grid with one cell per (method, estimator), MAE text, best cell outlined."""
    width = LEFT + CELL_W * len(estimators) + 20
    height = TOP + CELL_H * len(methods) + 30
    vals = [mae[k] for k in mae]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<text x="{LEFT}" y="20" font-size="14">{escape(title)}</text>',
    ]
    for j, est in enumerate(estimators):
        parts.append(
            f'<text x="{LEFT + j * CELL_W + CELL_W // 2}" y="{TOP - 8}" '
            f'text-anchor="middle">{escape(est)}</text>'
        )
    for i, method in enumerate(methods):
        parts.append(
            f'<text x="{LEFT - 8}" y="{TOP + i * CELL_H + CELL_H // 2 + 4}" '
            f'text-anchor="end">{escape(method)}</text>'
        )
        for j, est in enumerate(estimators):
            x, y = LEFT + j * CELL_W, TOP + i * CELL_H
            m = mae[(method, est)]
            p = pcc[(method, est)]
            fill = _shade(m, lo, hi)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                f'fill="{fill}" stroke="#888"/>'
            )
            parts.append(
                f'<text x="{x + CELL_W // 2}" y="{y + 14}" text-anchor="middle">{m:.2f}</text>'
            )
            parts.append(
                f'<text x="{x + CELL_W // 2}" y="{y + 28}" text-anchor="middle" '
                f'fill="#333">{p:.2f}</text>'
            )
            if (method, est) == best:
                parts.append(
                    f'<rect x="{x + 1}" y="{y + 1}" width="{CELL_W - 2}" height="{CELL_H - 2}" '
                    f'fill="none" stroke="#ffffff" stroke-width="3"/>'
                )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def filter_curves_svg(
    rows: list[tuple[str, str, float, float]],
    title: str = "Error after dropping predicted low-quality windows",
) -> str:
    """Polyline per (method, score kind) of MAE versus dropped fraction.

    rows: (method_id, score_kind, q, mae).
    """
    width, height = 560, 360
    plot_l, plot_r, plot_t, plot_b = 70, width - 170, 40, height - 50
    series: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for method, kind, q, mae in rows:
        series.setdefault((method, kind), []).append((q, mae))
    maes = [m for pts in series.values() for _, m in pts] or [0.0, 1.0]
    q_max = max((q for pts in series.values() for q, _ in pts), default=0.5) or 0.5
    lo, hi = min(maes), max(maes)
    if hi <= lo:
        hi = lo + 1.0

    def sx(q):
        return plot_l + (q / q_max) * (plot_r - plot_l)

    def sy(m):
        return plot_b - (m - lo) / (hi - lo) * (plot_b - plot_t)

    palette = ["#1f4e9c", "#b03a2e", "#1e8449", "#7d3c98", "#b7950b", "#117a8b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<text x="{plot_l}" y="20" font-size="14">{escape(title)}</text>',
        f'<line x1="{plot_l}" y1="{plot_b}" x2="{plot_r}" y2="{plot_b}" stroke="#000"/>',
        f'<line x1="{plot_l}" y1="{plot_t}" x2="{plot_l}" y2="{plot_b}" stroke="#000"/>',
        f'<text x="{(plot_l + plot_r) // 2}" y="{height - 12}" text-anchor="middle">'
        "dropped fraction</text>",
        f'<text x="16" y="{(plot_t + plot_b) // 2}" '
        f'transform="rotate(-90 16 {(plot_t + plot_b) // 2})" text-anchor="middle">MAE (bpm)</text>',
    ]
    for i, ((method, kind), pts) in enumerate(sorted(series.items())):
        color = palette[i % len(palette)]
        pts = sorted(pts)
        path = " ".join(f"{sx(q):.1f},{sy(m):.1f}" for q, m in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = plot_t + 16 * i
        parts.append(f'<line x1="{plot_r + 8}" y1="{ly}" x2="{plot_r + 28}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{plot_r + 34}" y="{ly + 4}">{escape(f"{method}/{kind}")}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
