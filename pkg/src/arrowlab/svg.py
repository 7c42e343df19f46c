"""Deterministic SVG emission for spacetime diagrams and series plots.

Output bytes are a pure function of the input data: fixed canvas, fixed
palette, fixed "%.2f" coordinate formatting, no timestamps.
"""
from __future__ import annotations

from .errors import DomainError
from .fixedpoint import SCALE, FixedPoint

WIDTH = 640
HEIGHT = 480
MARGIN = 40

_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (value - lo) * (out_hi - out_lo) / (hi - lo)


def _document(body: list[str], title: str) -> bytes:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    frame = (
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>'
    )
    label = (
        f'<text x="{MARGIN}" y="{MARGIN - 10}" font-size="14" '
        f'font-family="monospace">{title}</text>'
    )
    doc = "\n".join([head, frame, label, *body, "</svg>", ""])
    return doc.encode("ascii")


def emit_spacetime_svg(rows: list[tuple[int, int, FixedPoint, FixedPoint]],
                       axis: str = "x", title: str = "spacetime") -> bytes:
    """One polyline per ball: the chosen spatial coordinate against time.

    Time runs down the vertical axis; the spatial coordinate runs along the
    horizontal one.
    """
    if not rows:
        raise DomainError("cannot plot an empty trajectory")
    if axis not in ("x", "y"):
        raise DomainError(f"axis must be 'x' or 'y', not {axis!r}")
    coord = 2 if axis == "x" else 3
    by_ball: dict[int, list[tuple[int, float]]] = {}
    for row in rows:
        by_ball.setdefault(row[1], []).append((row[0], row[coord].to_float()))
    steps = [row[0] for row in rows]
    values = [row[coord].to_float() for row in rows]
    t_lo, t_hi = min(steps), max(steps)
    v_lo, v_hi = min(values), max(values)
    body = []
    for ball in sorted(by_ball):
        pts = []
        for step, value in by_ball[ball]:
            px = _scale(value, v_lo, v_hi, MARGIN, WIDTH - MARGIN)
            py = _scale(step, t_lo, t_hi, MARGIN, HEIGHT - MARGIN)
            pts.append(f"{_fmt(px)},{_fmt(py)}")
        color = _PALETTE[ball % len(_PALETTE)]
        body.append(f'<polyline fill="none" stroke="{color}" '
                    f'stroke-width="1" points="{" ".join(pts)}"/>')
    return _document(body, title)


def emit_series_svg(series: list[tuple[int, float]],
                    title: str = "series") -> bytes:
    """Single polyline of a scalar series against step index."""
    if not series:
        raise DomainError("cannot plot an empty series")
    steps = [p[0] for p in series]
    values = [p[1] for p in series]
    t_lo, t_hi = min(steps), max(steps)
    v_lo, v_hi = min(values), max(values)
    pts = []
    for step, value in series:
        px = _scale(step, t_lo, t_hi, MARGIN, WIDTH - MARGIN)
        py = _scale(value, v_lo, v_hi, HEIGHT - MARGIN, MARGIN)
        pts.append(f"{_fmt(px)},{_fmt(py)}")
    body = [f'<polyline fill="none" stroke="{_PALETTE[0]}" '
            f'stroke-width="1.5" points="{" ".join(pts)}"/>']
    return _document(body, title)


def snapshot_bounds(snapshots) -> list[tuple[float, float, float, float]]:
    """Axis-aligned bounds (min_x, min_y, max_x, max_y) per snapshot, in
    simulation units; used to check that trajectories disperse."""
    bounds = []
    for _, pos in snapshots:
        xs = pos[:, 0] / float(SCALE)
        ys = pos[:, 1] / float(SCALE)
        bounds.append((float(xs.min()), float(ys.min()),
                       float(xs.max()), float(ys.max())))
    return bounds
