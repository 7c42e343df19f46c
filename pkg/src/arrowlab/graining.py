"""Coarse-graining of positions into cells and occupation entropy."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from math import log
from pathlib import Path

import numpy as np

from .errors import DomainError
from .fixedpoint import FixedPoint

DEFAULT_CELLS_PER_AXIS = 8


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class CoarseGraining:
    """Square-cell partition of a rectangular box."""

    cell_size: FixedPoint
    box_w: FixedPoint
    box_h: FixedPoint

    def __post_init__(self):
        if self.cell_size.raw <= 0:
            raise DomainError("cell size must be positive")
        if self.box_w.raw <= 0 or self.box_h.raw <= 0:
            raise DomainError("box dimensions must be positive")

    @classmethod
    def default_for_box(cls, box_w: FixedPoint, box_h: FixedPoint) -> "CoarseGraining":
        """Default partition: DEFAULT_CELLS_PER_AXIS cells along the width."""
        cell = FixedPoint(_ceil_div(box_w.raw, DEFAULT_CELLS_PER_AXIS))
        return cls(cell_size=cell, box_w=box_w, box_h=box_h)

    @property
    def cells_x(self) -> int:
        return _ceil_div(self.box_w.raw, self.cell_size.raw)

    @property
    def cells_y(self) -> int:
        return _ceil_div(self.box_h.raw, self.cell_size.raw)

    @property
    def cell_count(self) -> int:
        return self.cells_x * self.cells_y

    def cell_index(self, x_raw: int, y_raw: int) -> int:
        cx = x_raw // self.cell_size.raw
        cy = y_raw // self.cell_size.raw
        return int(cy) * self.cells_x + int(cx)


@dataclass
class Histogram:
    """Occupation counts per cell; cells with zero count are omitted."""

    counts: dict[int, int]
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise DomainError("histogram counts do not sum to total")


def _positions_raw(positions) -> np.ndarray:
    if isinstance(positions, np.ndarray):
        return positions
    rows = []
    for p in positions:
        x, y = p
        rows.append((x.raw if isinstance(x, FixedPoint) else int(x),
                     y.raw if isinstance(y, FixedPoint) else int(y)))
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def coarse_grain(positions, graining: CoarseGraining) -> Histogram:
    """Count positions per cell. Positions must lie inside the box."""
    raw = _positions_raw(positions)
    w, h = graining.box_w.raw, graining.box_h.raw
    for i in range(raw.shape[0]):
        x, y = int(raw[i, 0]), int(raw[i, 1])
        if x < 0 or x >= w or y < 0 or y >= h:
            raise DomainError(f"position {i} lies outside the box")
    counts: dict[int, int] = {}
    for i in range(raw.shape[0]):
        c = graining.cell_index(int(raw[i, 0]), int(raw[i, 1]))
        counts[c] = counts.get(c, 0) + 1
    return Histogram(counts=counts, total=raw.shape[0])


def entropy(h: Histogram) -> float:
    """Shannon entropy of the occupation histogram, in nats."""
    if h.total < 1:
        raise DomainError("entropy of an empty histogram is undefined")
    s = 0.0
    for n in h.counts.values():
        if n > 0:
            p = n / h.total
            s -= p * log(p)
    return s


def write_histogram_csv(h: Histogram, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["cell_index", "count"])
        for cell in sorted(h.counts):
            writer.writerow([cell, h.counts[cell]])


def read_histogram_csv(path) -> Histogram:
    counts: dict[int, int] = {}
    with open(Path(path), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != ["cell_index", "count"]:
            raise DomainError(f"unexpected histogram header {header}")
        for row in reader:
            counts[int(row[0])] = int(row[1])
    return Histogram(counts=counts, total=sum(counts.values()))
