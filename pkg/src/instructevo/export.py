"""Pareto exports: frontier records, 2D scatter data, and SVG renderings.

Each run emits the frontier as one JSON record per line, plus three 2D
projections of the first three fronts (performance-length,
performance-perplexity, length-perplexity) as CSV and as a simple SVG
scatter. Front 0/1/2 points are drawn red/green/blue.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .archive import Archive
from .model import Individual, serialize_individual
from .moea import fast_nondominated_sort

PROJECTIONS = (
    ("performance", "length"),
    ("performance", "perplexity"),
    ("length", "perplexity"),
)
FRONT_COLORS = ("#d62728", "#2ca02c", "#1f77b4")  # red, green, blue
MAX_FRONTS = 3


def _axis_value(ind: Individual, axis: str) -> float:
    return float(getattr(ind.objectives, axis))


def render_scatter_svg(
    points: Sequence[tuple[float, float, int]],
    x_label: str,
    y_label: str,
    width: int = 480,
    height: int = 360,
) -> str:
    """Minimal SVG scatter; points are (x, y, front_index)."""
    margin = 50
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x: float) -> float:
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - (y - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{y_label}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10">{x_lo:.4g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" '
        f'font-size="10">{x_hi:.4g}</text>',
        f'<text x="{margin - 4}" y="{height - margin}" text-anchor="end" '
        f'font-size="10">{y_lo:.4g}</text>',
        f'<text x="{margin - 4}" y="{margin + 4}" text-anchor="end" font-size="10">{y_hi:.4g}</text>',
    ]
    for x, y, front in points:
        color = FRONT_COLORS[front % len(FRONT_COLORS)]
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{color}" '
                     f'fill-opacity="0.8"><title>front {front}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts)


def export_pareto(archive: Archive, out: str | Path) -> list[Path]:
    """Write frontier records, scatter CSVs, and SVGs; returns written paths."""
    entries = archive.entries
    if not entries:
        raise ValueError("archive is empty; nothing to export")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    frontier_path = out_dir / "frontier.jsonl"
    with frontier_path.open("w", encoding="utf-8") as fh:
        for ind in archive.frontier:
            fh.write(serialize_individual(ind) + "\n")
    written.append(frontier_path)

    fronts = fast_nondominated_sort([e.objectives.as_tuple() for e in entries])[:MAX_FRONTS]
    for x_axis, y_axis in PROJECTIONS:
        points = [
            (_axis_value(entries[i], x_axis), _axis_value(entries[i], y_axis), front_idx, entries[i])
            for front_idx, front in enumerate(fronts)
            for i in front
        ]
        stem = f"scatter_{x_axis}_{y_axis}"
        csv_path = out_dir / f"{stem}.csv"
        with csv_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["front", "id", x_axis, y_axis])
            for x, y, front_idx, ind in points:
                writer.writerow([front_idx, ind.instruction.id, repr(x), repr(y)])
        written.append(csv_path)

        svg_path = out_dir / f"{stem}.svg"
        svg_path.write_text(
            render_scatter_svg([(x, y, f) for x, y, f, _ in points], x_axis, y_axis),
            encoding="utf-8",
        )
        written.append(svg_path)
    return written
