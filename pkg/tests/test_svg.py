import xml.etree.ElementTree as ET

import pytest

from arrowlab import billiard, svg
from arrowlab.errors import DomainError
from arrowlab.fixedpoint import FixedPoint
from arrowlab.scenarios import BilliardConfig

NS = "{http://www.w3.org/2000/svg}"


def fx(v: float) -> FixedPoint:
    return FixedPoint.from_float(v)


def polylines(data: bytes):
    root = ET.fromstring(data.decode("ascii"))
    return root.findall(f"{NS}polyline")


def test_spacetime_polyline_counts():
    rows = []
    for step in (0, 10, 20):
        for ball in (0, 1):
            rows.append((step, ball, fx(1.0 + ball + step / 40), fx(2.0)))
    data = svg.emit_spacetime_svg(rows)
    lines = polylines(data)
    assert len(lines) == 2
    for line in lines:
        assert len(line.get("points").split()) == 3


def test_byte_determinism():
    rows = [(0, 0, fx(1.0), fx(2.0)), (5, 0, fx(3.0), fx(2.5))]
    assert svg.emit_spacetime_svg(rows) == svg.emit_spacetime_svg(rows)
    series = [(0, 0.1), (1, 0.4), (2, 0.3)]
    assert svg.emit_series_svg(series) == svg.emit_series_svg(series)


def test_empty_inputs_rejected():
    with pytest.raises(DomainError):
        svg.emit_spacetime_svg([])
    with pytest.raises(DomainError):
        svg.emit_series_svg([])
    with pytest.raises(DomainError):
        svg.emit_spacetime_svg([(0, 0, fx(1.0), fx(1.0))], axis="t")


def test_series_svg_single_polyline():
    data = svg.emit_series_svg([(i, float(i * i)) for i in range(10)])
    assert len(polylines(data)) == 1


def test_dispersal_bounding_boxes_expand(warm_kernel):
    cfg = BilliardConfig()
    state = cfg.initial_state(1)
    _, traj = billiard.advance(state, cfg.n_steps, cfg.force_law(), cfg.dt,
                               record_every=cfg.record_every,
                               graining=cfg.graining())
    bounds = svg.snapshot_bounds(traj.snapshots)

    def area(b):
        return (b[2] - b[0]) * (b[3] - b[1])

    first, last = area(bounds[0]), area(bounds[-1])
    assert last > 4.0 * first
    # The occupied region grows on the way to equilibrium: every quarter of
    # the run should cover at least as much as the one before, within noise.
    quarters = [area(bounds[min(len(bounds) - 1, (len(bounds) * q) // 4)])
                for q in range(1, 5)]
    assert quarters[-1] >= quarters[0]
