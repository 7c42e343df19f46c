"""Deterministic, bit-exactly time-reversible 2-D soft-disc dynamics.

Discs interact through a steep truncated repulsive pair potential and
position-only wall ramps, integrated with integer position-Verlet. Hard
impulsive collisions are deliberately avoided: a position-only force plus
exact integer arithmetic is what makes `reverse_momenta` an exact involution
of the dynamics, valid for any state and any number of steps.

Velocities are implicit in the two-step state: v = (positions -
prev_positions) / dt.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from math import ceil, cos, pi, sin, sqrt
from pathlib import Path

import numpy as np

from . import _verlet
from .errors import DomainError, EngineError
from .fixedpoint import SCALE_BITS, FixedPoint, decimal_to_raw, mul_raw
from .graining import CoarseGraining, coarse_grain, entropy
from .rng import rng_stream

STREAM_INIT = 0
STREAM_PERTURB = 1


@dataclass(frozen=True)
class ForceLaw:
    """Pair repulsion F = k*(cutoff^2 - d^2)*r for d < cutoff, plus wall ramps.

    Forces depend on current positions only, never on velocities.
    """

    pair_stiffness: FixedPoint
    cutoff: FixedPoint
    wall_stiffness: FixedPoint
    wall_margin: FixedPoint

    def __post_init__(self):
        if self.cutoff.raw <= 0:
            raise DomainError("cutoff must be positive")
        if self.wall_margin.raw <= 0:
            raise DomainError("wall margin must be positive")

    @property
    def cutoff2_raw(self) -> int:
        return mul_raw(self.cutoff.raw, self.cutoff.raw)


@dataclass
class DiscState:
    """Phase point of N discs: positions and previous positions, raw int64."""

    positions: np.ndarray
    prev_positions: np.ndarray
    radius: FixedPoint
    box: tuple[FixedPoint, FixedPoint]
    step_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64)
        self.prev_positions = np.asarray(self.prev_positions, dtype=np.int64)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise DomainError("positions must have shape (N, 2)")
        if self.positions.shape != self.prev_positions.shape:
            raise DomainError("positions and prev_positions shapes differ")
        if self.positions.shape[0] < 1:
            raise DomainError("at least one disc is required")
        w, h = self.box[0].raw, self.box[1].raw
        for name, arr in (("positions", self.positions),
                          ("prev_positions", self.prev_positions)):
            if (arr[:, 0] <= 0).any() or (arr[:, 0] >= w).any() \
                    or (arr[:, 1] <= 0).any() or (arr[:, 1] >= h).any():
                raise DomainError(f"{name} must lie strictly inside the box")

    @property
    def n_discs(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "DiscState":
        return DiscState(self.positions.copy(), self.prev_positions.copy(),
                         self.radius, self.box, self.step_index)

    def velocities(self, dt: FixedPoint) -> np.ndarray:
        """Implicit velocities (positions - prev) / dt, as floats."""
        delta = (self.positions - self.prev_positions) / (1 << SCALE_BITS)
        return delta / dt.to_float()

    def phase_equal(self, other: "DiscState") -> bool:
        """Bitwise equality of the physical phase point."""
        return (np.array_equal(self.positions, other.positions)
                and np.array_equal(self.prev_positions, other.prev_positions))


@dataclass
class Trajectory:
    """Sampled positions and coarse-grained entropy along a run."""

    snapshots: list[tuple[int, np.ndarray]]
    entropy_series: list[tuple[int, float]]

    def append(self, step: int, positions: np.ndarray, s: float) -> None:
        if self.snapshots and step <= self.snapshots[-1][0]:
            raise DomainError("snapshot steps must be strictly increasing")
        self.snapshots.append((step, positions.copy()))
        self.entropy_series.append((step, s))

    def extend(self, other: "Trajectory") -> None:
        for (step, pos), (_, s) in zip(other.snapshots, other.entropy_series):
            if self.snapshots and step <= self.snapshots[-1][0]:
                continue
            self.append(step, pos, s)


def init_ordered(n_cluster: int, striker_speed: FixedPoint,
                 box: tuple[FixedPoint, FixedPoint], radius: FixedPoint,
                 rng_seed: int, dt: FixedPoint, *,
                 spacing: FixedPoint | None = None,
                 cluster_center: tuple[FixedPoint, FixedPoint] | None = None,
                 striker_x: FixedPoint | None = None,
                 aim_jitter: float = 2.0) -> DiscState:
    """Resting cluster on a square lattice plus one striker moving right.

    The lattice spacing defaults to 2*radius, which sits exactly at the force
    cutoff, so the cluster is in equilibrium until struck. The striker starts
    left of the cluster at a seed-jittered height aimed into the cluster.
    """
    if n_cluster < 0:
        raise DomainError("n_cluster must be nonnegative")
    w, h = box
    if spacing is None:
        spacing = FixedPoint(radius.raw * 2)
    if cluster_center is None:
        cluster_center = (FixedPoint(w.raw // 2), FixedPoint(h.raw // 2))
    if striker_x is None:
        striker_x = FixedPoint(w.raw // 8)

    points: list[tuple[int, int]] = []
    if n_cluster > 0:
        rows = max(1, int(sqrt(n_cluster)))
        cols = ceil(n_cluster / rows)
        cx, cy = cluster_center[0].raw, cluster_center[1].raw
        left = cx - spacing.raw * (cols - 1) // 2
        top = cy - spacing.raw * (rows - 1) // 2
        remaining = n_cluster
        for r in range(rows):
            in_row = min(cols, remaining)
            row_left = left + spacing.raw * (cols - in_row) // 2
            for c in range(in_row):
                points.append((row_left + c * spacing.raw, top + r * spacing.raw))
            remaining -= in_row

    stream = rng_stream(rng_seed, STREAM_INIT)
    jitter = (stream.uniform() - 0.5) * 2.0 * aim_jitter
    striker_y = FixedPoint.from_float(cluster_center[1].to_float() + jitter)
    points.append((striker_x.raw, striker_y.raw))

    margin = radius.raw * 2
    for i, (x, y) in enumerate(points):
        if x <= margin or x >= w.raw - margin or y <= margin or y >= h.raw - margin:
            raise DomainError(
                f"disc {i} does not fit inside the box with its wall margin")

    positions = np.array(points, dtype=np.int64)
    prev = positions.copy()
    # prev = pos - v*dt puts the striker in motion; cluster discs are at rest.
    prev[-1, 0] -= mul_raw(striker_speed.raw, dt.raw)
    return DiscState(positions=positions, prev_positions=prev,
                     radius=radius, box=box, step_index=0)


def default_force_law(radius: FixedPoint,
                      pair_stiffness: FixedPoint | None = None,
                      wall_stiffness: FixedPoint | None = None) -> ForceLaw:
    cutoff = FixedPoint(radius.raw * 2)
    if pair_stiffness is None:
        pair_stiffness = FixedPoint.from_float(4.0)
    if wall_stiffness is None:
        wall_stiffness = FixedPoint.from_float(16.0)
    return ForceLaw(pair_stiffness=pair_stiffness, cutoff=cutoff,
                    wall_stiffness=wall_stiffness, wall_margin=cutoff)


def _kernel_args(s: DiscState, law: ForceLaw, dt: FixedPoint):
    dt2 = mul_raw(dt.raw, dt.raw)
    args = (law.pair_stiffness.raw, law.cutoff2_raw, law.wall_stiffness.raw,
            law.wall_margin.raw, s.box[0].raw, s.box[1].raw, dt2)
    _verlet.check_static_bounds(s.n_discs, law.pair_stiffness.raw,
                                law.cutoff2_raw, law.wall_stiffness.raw,
                                law.wall_margin.raw, s.box[0].raw,
                                s.box[1].raw, dt2)
    return args


def step(s: DiscState, law: ForceLaw, dt: FixedPoint) -> DiscState:
    """One exact position-Verlet step."""
    out, _ = advance(s, 1, law, dt, record_every=1)
    return out


def advance(s: DiscState, n_steps: int, law: ForceLaw, dt: FixedPoint,
            record_every: int = 1,
            graining: CoarseGraining | None = None) -> tuple[DiscState, Trajectory]:
    """Apply n_steps, sampling positions and entropy every record_every steps.

    The entry state is always recorded; so is the final state even when
    n_steps is not a multiple of record_every.
    """
    if n_steps < 0:
        raise DomainError("n_steps must be nonnegative")
    if record_every < 1:
        raise DomainError("record_every must be >= 1")
    if graining is None:
        graining = CoarseGraining.default_for_box(*s.box)
    args = _kernel_args(s, law, dt)

    pos = s.positions.copy()
    prev = s.prev_positions.copy()
    traj = Trajectory(snapshots=[], entropy_series=[])

    def record(local_step: int) -> None:
        h = coarse_grain(pos, graining)
        traj.append(s.step_index + local_step, pos, entropy(h))

    record(0)
    done = 0
    while done < n_steps:
        chunk = min(record_every, n_steps - done)
        err, completed = _verlet.run_steps(pos, prev, chunk, *args)
        if err == _verlet.ERR_OUT_OF_BOX:
            raise EngineError("disc left the box; stiffen the walls or "
                              "reduce speeds", step=s.step_index + done + completed)
        done += chunk
        record(done)

    out = DiscState(positions=pos, prev_positions=prev, radius=s.radius,
                    box=s.box, step_index=s.step_index + n_steps)
    return out, traj


def reverse_momenta(s: DiscState) -> DiscState:
    """Exact velocity negation: swap positions with prev_positions."""
    return DiscState(positions=s.prev_positions.copy(),
                     prev_positions=s.positions.copy(),
                     radius=s.radius, box=s.box, step_index=s.step_index)


def perturb(s: DiscState, ball: int,
            displacement: tuple[FixedPoint, FixedPoint]) -> DiscState:
    """Shift one disc (positions and prev equally, velocity unchanged)."""
    if ball < 0 or ball >= s.n_discs:
        raise DomainError(f"disc index {ball} out of range")
    dx, dy = displacement[0].raw, displacement[1].raw
    pos = s.positions.copy()
    prev = s.prev_positions.copy()
    pos[ball, 0] += dx
    pos[ball, 1] += dy
    prev[ball, 0] += dx
    prev[ball, 1] += dy
    w, h = s.box[0].raw, s.box[1].raw
    for arr in (pos, prev):
        if not (0 < arr[ball, 0] < w and 0 < arr[ball, 1] < h):
            raise DomainError("displacement moves the disc out of the box")
    return DiscState(positions=pos, prev_positions=prev, radius=s.radius,
                     box=s.box, step_index=s.step_index)


def random_perturbation(seed: int, magnitude: float,
                        n_discs: int) -> tuple[int, tuple[FixedPoint, FixedPoint]]:
    """Seeded choice of disc and displacement direction for perturbed runs."""
    stream = rng_stream(seed, STREAM_PERTURB)
    ball = stream.integer(n_discs)
    angle = stream.uniform() * 2.0 * pi
    disp = (FixedPoint.from_float(magnitude * cos(angle)),
            FixedPoint.from_float(magnitude * sin(angle)))
    return ball, disp


def spacetime_export(t: Trajectory) -> list[tuple[int, int, FixedPoint, FixedPoint]]:
    """Flatten a trajectory into (step, ball, x, y) rows."""
    if not t.snapshots:
        raise DomainError("cannot export an empty trajectory")
    rows = []
    for step_idx, pos in t.snapshots:
        for ball in range(pos.shape[0]):
            rows.append((step_idx, ball,
                         FixedPoint(int(pos[ball, 0])),
                         FixedPoint(int(pos[ball, 1]))))
    return rows


def write_trajectory_csv(t: Trajectory, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "ball", "x", "y"])
        for step_idx, ball, x, y in spacetime_export(t):
            writer.writerow([step_idx, ball, x.to_decimal(), y.to_decimal()])


def read_trajectory_csv(path) -> list[tuple[int, int, int, int]]:
    """Parse rows back to raw values; exact inverse of write_trajectory_csv."""
    rows = []
    with open(Path(path), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != ["step", "ball", "x", "y"]:
            raise DomainError(f"unexpected trajectory header {header}")
        for row in reader:
            rows.append((int(row[0]), int(row[1]),
                         decimal_to_raw(row[2]), decimal_to_raw(row[3])))
    return rows


def write_entropy_csv(t: Trajectory, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "entropy"])
        for step_idx, s in t.entropy_series:
            writer.writerow([step_idx, repr(s)])


def entropy_slope(series: list[tuple[int, float]]) -> float:
    """Least-squares slope of entropy against step index."""
    if len(series) < 2:
        raise DomainError("need at least two samples for a slope")
    t = np.array([p[0] for p in series], dtype=float)
    s = np.array([p[1] for p in series], dtype=float)
    t -= t.mean()
    return float((t * (s - s.mean())).sum() / (t * t).sum())
