"""Integer position-Verlet kernel.

All arithmetic is on int64 raw fixed-point values. The update
x_next = 2*x - x_prev + F(x)*dt^2 is an exact involution under swapping
(x_prev, x) with (x, x_next), which is what makes momentum reversal recover
earlier states bit for bit. Forces depend on current positions only.

The jitted kernel and `step_reference` implement the same formulas; tests
assert they agree bitwise. Overflow safety comes from static bounds checked
in `check_static_bounds` before the kernel runs, plus the in-box guard
inside the loop; int64 arithmetic never wraps within those bounds.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import FixedPointOverflowError
from .fixedpoint import SCALE_BITS, rtz_shift

ERR_NONE = 0
ERR_OUT_OF_BOX = 1

# Conservative headroom: every intermediate product of two checked raws must
# stay below 2**62.
_PRODUCT_LIMIT = 1 << 62


@njit(cache=True)
def _rtz(value, bits):
    if value >= 0:
        return value >> bits
    return -((-value) >> bits)


@njit(cache=True)
def run_steps(pos, prev, n_steps, k_pair, cutoff2, k_wall, margin,
              box_w, box_h, dt2):
    """Advance n_steps in place. Returns (error_code, steps_completed)."""
    n = pos.shape[0]
    force = np.empty((n, 2), np.int64)
    for s in range(n_steps):
        for i in range(n):
            force[i, 0] = 0
            force[i, 1] = 0
        # Pair repulsion inside the cutoff; each pair evaluated once and
        # negated for the partner, so F_ij == -F_ji bitwise.
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                d2 = ((dx * dx) >> SCALE_BITS) + ((dy * dy) >> SCALE_BITS)
                ov2 = cutoff2 - d2
                if ov2 > 0:
                    common = _rtz(k_pair * ov2, SCALE_BITS)
                    fx = _rtz(common * dx, SCALE_BITS)
                    fy = _rtz(common * dy, SCALE_BITS)
                    force[i, 0] += fx
                    force[i, 1] += fy
                    force[j, 0] -= fx
                    force[j, 1] -= fy
        # Wall ramps, position-dependent only.
        for i in range(n):
            for c in range(2):
                lim = box_w if c == 0 else box_h
                x = pos[i, c]
                if x < margin:
                    force[i, c] += _rtz(k_wall * (margin - x), SCALE_BITS)
                if x > lim - margin:
                    force[i, c] -= _rtz(k_wall * (x - (lim - margin)), SCALE_BITS)
        for i in range(n):
            for c in range(2):
                lim = box_w if c == 0 else box_h
                nxt = 2 * pos[i, c] - prev[i, c] + _rtz(force[i, c] * dt2, SCALE_BITS)
                prev[i, c] = pos[i, c]
                pos[i, c] = nxt
                if nxt <= 0 or nxt >= lim:
                    return ERR_OUT_OF_BOX, s
    return ERR_NONE, n_steps


def step_reference(pos, prev, k_pair, cutoff2, k_wall, margin,
                   box_w, box_h, dt2):
    """One step in plain Python ints; must match run_steps bitwise."""
    n = pos.shape[0]
    force = [[0, 0] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            dx = int(pos[i, 0]) - int(pos[j, 0])
            dy = int(pos[i, 1]) - int(pos[j, 1])
            d2 = ((dx * dx) >> SCALE_BITS) + ((dy * dy) >> SCALE_BITS)
            ov2 = cutoff2 - d2
            if ov2 > 0:
                common = rtz_shift(k_pair * ov2, SCALE_BITS)
                fx = rtz_shift(common * dx, SCALE_BITS)
                fy = rtz_shift(common * dy, SCALE_BITS)
                force[i][0] += fx
                force[i][1] += fy
                force[j][0] -= fx
                force[j][1] -= fy
    for i in range(n):
        for c, lim in ((0, box_w), (1, box_h)):
            x = int(pos[i, c])
            if x < margin:
                force[i][c] += rtz_shift(k_wall * (margin - x), SCALE_BITS)
            if x > lim - margin:
                force[i][c] -= rtz_shift(k_wall * (x - (lim - margin)), SCALE_BITS)
    new_pos = np.empty_like(pos)
    for i in range(n):
        for c in range(2):
            acc = rtz_shift(force[i][c] * dt2, SCALE_BITS)
            new_pos[i, c] = 2 * int(pos[i, c]) - int(prev[i, c]) + acc
    return new_pos


def check_static_bounds(n: int, k_pair: int, cutoff2: int, k_wall: int,
                        margin: int, box_w: int, box_h: int, dt2: int) -> None:
    """Prove no int64 product can overflow while all discs stay in the box."""
    box = max(box_w, box_h)
    if box * box >= _PRODUCT_LIMIT:
        raise FixedPointOverflowError("box too large for exact pair distances")
    if k_pair * max(cutoff2, 1) >= _PRODUCT_LIMIT:
        raise FixedPointOverflowError("pair stiffness times cutoff^2 too large")
    common = rtz_shift(k_pair * cutoff2, SCALE_BITS)
    if max(common, 1) * box >= _PRODUCT_LIMIT:
        raise FixedPointOverflowError("pair force term too large for the box")
    if k_wall * box >= _PRODUCT_LIMIT:
        raise FixedPointOverflowError("wall stiffness too large for the box")
    pair_force = rtz_shift(max(common, 1) * box, SCALE_BITS)
    wall_force = rtz_shift(k_wall * max(margin, 1), SCALE_BITS)
    total_force = n * pair_force + wall_force
    if max(total_force, 1) * max(dt2, 1) >= _PRODUCT_LIMIT:
        raise FixedPointOverflowError("net force times dt^2 too large")
