"""Standalone SVG log-log plots of per-N medians, one polyline per estimator.

The files are plain hand-built SVG text: deterministic output, no renderer
or plotting dependency, and simple enough to assert on in tests.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..errors import InvalidParameterError
from .results import ResultTable

_WIDTH = 640.0
_HEIGHT = 440.0
_MARGIN_LEFT = 72.0
_MARGIN_TOP = 24.0
_MARGIN_BOTTOM = 56.0
_LEGEND_WIDTH = 158.0

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)


def _log_range(values: list[float]) -> tuple[float, float]:
    lo = math.log10(min(values))
    hi = math.log10(max(values))
    if hi - lo < 1e-12:
        return lo - 0.5, hi + 0.5
    pad = 0.06 * (hi - lo)
    return lo - pad, hi + pad


def _tick_label(value: float) -> str:
    if value >= 1.0 and abs(value - round(value)) < 1e-9 * max(1.0, value):
        return f"{int(round(value))}"
    return f"{value:.3g}"


def _decade_ticks(lo: float, hi: float) -> list[float]:
    first = math.ceil(lo - 1e-9)
    last = math.floor(hi + 1e-9)
    return [10.0**k for k in range(first, last + 1)]


def emit_plot(table: ResultTable, metric: str, path: str | Path) -> None:
    """Render the per-N medians of ``metric`` for every estimator that has it.

    Axes are log-scaled, so only points with positive finite medians are
    drawn; an estimator with no drawable point is dropped, and a metric with
    no drawable series at all is an error.
    """
    estimators = table.estimators_for(metric)
    if not estimators:
        raise InvalidParameterError(f"metric {metric!r} does not appear in the table")

    series: list[tuple[str, list[tuple[int, float]]]] = []
    for estimator in estimators:
        points = [
            (total, median)
            for total, median in table.median_series(metric, estimator)
            if math.isfinite(median) and median > 0.0
        ]
        if points:
            series.append((estimator, points))
    if not series:
        raise InvalidParameterError(f"metric {metric!r} has no positive finite medians to plot")

    xs = sorted({total for _, points in series for total, _ in points})
    ys = [median for _, points in series for _, median in points]
    x_lo, x_hi = _log_range([float(x) for x in xs])
    y_lo, y_hi = _log_range(ys)

    plot_left = _MARGIN_LEFT
    plot_right = _WIDTH - _LEGEND_WIDTH - 10.0
    plot_top = _MARGIN_TOP
    plot_bottom = _HEIGHT - _MARGIN_BOTTOM

    def sx(total: float) -> float:
        t = (math.log10(total) - x_lo) / (x_hi - x_lo)
        return plot_left + t * (plot_right - plot_left)

    def sy(value: float) -> float:
        t = (math.log10(value) - y_lo) / (y_hi - y_lo)
        return plot_bottom - t * (plot_bottom - plot_top)

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:g}" height="{_HEIGHT:g}" '
        f'viewBox="0 0 {_WIDTH:g} {_HEIGHT:g}" font-family="sans-serif" font-size="12">'
    )
    parts.append(f'<rect x="0" y="0" width="{_WIDTH:g}" height="{_HEIGHT:g}" fill="white"/>')
    parts.append(
        f'<rect x="{plot_left:.2f}" y="{plot_top:.2f}" width="{plot_right - plot_left:.2f}" '
        f'height="{plot_bottom - plot_top:.2f}" fill="none" stroke="#333333" stroke-width="1"/>'
    )

    # x ticks at the observed N values (log-log plots stay readable because
    # grids are short and roughly geometric)
    x_ticks = xs if len(xs) <= 8 else xs[:: (len(xs) + 7) // 8]
    for total in x_ticks:
        x = sx(float(total))
        parts.append(
            f'<line x1="{x:.2f}" y1="{plot_bottom:.2f}" x2="{x:.2f}" y2="{plot_bottom + 5:.2f}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{plot_bottom + 20:.2f}" text-anchor="middle">{total}</text>'
        )

    y_ticks = _decade_ticks(y_lo, y_hi)
    if len(y_ticks) < 2:
        y_ticks = [10.0**y_lo, 10.0**y_hi]
    for value in y_ticks:
        y = sy(value)
        parts.append(
            f'<line x1="{plot_left - 5:.2f}" y1="{y:.2f}" x2="{plot_left:.2f}" y2="{y:.2f}" '
            f'stroke="#333333" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{plot_left:.2f}" y1="{y:.2f}" x2="{plot_right:.2f}" y2="{y:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{plot_left - 9:.2f}" y="{y + 4:.2f}" text-anchor="end">{escape(_tick_label(value))}</text>'
        )

    parts.append(
        f'<text x="{(plot_left + plot_right) / 2:.2f}" y="{_HEIGHT - 14:.2f}" '
        f'text-anchor="middle">N (total nodes)</text>'
    )
    parts.append(
        f'<text x="18" y="{(plot_top + plot_bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(plot_top + plot_bottom) / 2:.2f})">{escape(metric)}</text>'
    )
    parts.append(
        f'<text x="{(plot_left + plot_right) / 2:.2f}" y="{plot_top - 8:.2f}" text-anchor="middle" '
        f'font-size="14">{escape(metric)} (median over seeds)</text>'
    )

    legend_x = plot_right + 18.0
    for index, (estimator, points) in enumerate(series):
        color = _PALETTE[index % len(_PALETTE)]
        coords = " ".join(f"{sx(float(t)):.2f},{sy(v):.2f}" for t, v in points)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        for total, value in points:
            parts.append(
                f'<circle cx="{sx(float(total)):.2f}" cy="{sy(value):.2f}" r="3.2" fill="{color}"/>'
            )
        ly = plot_top + 14.0 + 20.0 * index
        parts.append(
            f'<line x1="{legend_x:.2f}" y1="{ly:.2f}" x2="{legend_x + 22:.2f}" y2="{ly:.2f}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        parts.append(
            f'<text x="{legend_x + 28:.2f}" y="{ly + 4:.2f}">{escape(estimator)}</text>'
        )

    parts.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(parts) + "\n")
