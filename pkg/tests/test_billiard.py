from math import log

import numpy as np
import pytest

from arrowlab import _verlet, billiard
from arrowlab.errors import DomainError, EngineError, FixedPointOverflowError
from arrowlab.fixedpoint import FixedPoint, mul_raw
from arrowlab.graining import coarse_grain, entropy
from arrowlab.scenarios import BilliardConfig

DT = FixedPoint(1 << (20 - 6))  # 2**-6


def fx(v: float) -> FixedPoint:
    return FixedPoint.from_float(v)


def free_law() -> billiard.ForceLaw:
    return billiard.default_force_law(fx(1.5))


def make_state(points, prev=None, box=64.0, radius=1.5) -> billiard.DiscState:
    pos = np.array([[fx(x).raw, fx(y).raw] for x, y in points], dtype=np.int64)
    prev_arr = pos.copy() if prev is None else \
        np.array([[fx(x).raw, fx(y).raw] for x, y in prev], dtype=np.int64)
    return billiard.DiscState(positions=pos, prev_positions=prev_arr,
                              radius=fx(radius), box=(fx(box), fx(box)))


def scenario_state(seed=1) -> billiard.DiscState:
    return BilliardConfig().initial_state(seed)


# --- initialization ----------------------------------------------------------

def test_init_ordered_counts_and_rest():
    s = scenario_state()
    assert s.n_discs == 16
    # Cluster discs are at rest: positions equal prev_positions bitwise.
    assert np.array_equal(s.positions[:15], s.prev_positions[:15])
    assert not np.array_equal(s.positions[15], s.prev_positions[15])


def test_init_striker_only():
    s = billiard.init_ordered(0, fx(1.0), (fx(64.0), fx(64.0)), fx(1.5),
                              rng_seed=3, dt=DT)
    assert s.n_discs == 1
    # Ballistic free flight: constant displacement per step.
    law = free_law()
    stepped = billiard.step(s, law, DT)
    delta0 = stepped.positions - s.positions
    again = billiard.step(stepped, law, DT)
    assert np.array_equal(again.positions - stepped.positions, delta0)


def test_initial_entropy_well_below_uniform():
    cfg = BilliardConfig()
    for seed in range(10):
        s = cfg.initial_state(seed)
        g = cfg.graining()
        s0 = entropy(coarse_grain(s.positions, g))
        assert s0 < 0.25 * log(g.cell_count)


def test_initial_histogram_matches_documented_layout():
    # 3 rows x 5 cols at spacing 3 around (33.5, 35.5), 8-unit cells:
    # columns 27.5 and 30.5 fall in cell column 3, columns 33.5/36.5/39.5 in
    # column 4; every row and the striker's jittered height sit in cell row 4;
    # the striker x=10 sits in column 1.
    cfg = BilliardConfig()
    s = cfg.initial_state(1)
    h = coarse_grain(s.positions, cfg.graining())
    assert h.counts == {4 * 8 + 3: 6, 4 * 8 + 4: 9, 4 * 8 + 1: 1}


def test_init_geometry_overflow():
    with pytest.raises(DomainError):
        billiard.init_ordered(15, fx(1.0), (fx(10.0), fx(10.0)), fx(1.5),
                              rng_seed=1, dt=DT)


# --- single steps ------------------------------------------------------------

def test_step_fixed_point_at_rest():
    s = make_state([(32.0, 32.0)])
    out = billiard.step(s, free_law(), DT)
    assert np.array_equal(out.positions, s.positions)
    assert out.step_index == 1


def test_free_flight_exact_velocity():
    v = fx(2.0)
    start = fx(20.0)
    prev_x = FixedPoint(start.raw - mul_raw(v.raw, DT.raw))
    s = make_state([(20.0, 32.0)], prev=[(prev_x.to_float(), 32.0)])
    per_step = mul_raw(v.raw, DT.raw)
    out = s
    for k in range(1, 6):
        out = billiard.step(out, free_law(), DT)
        assert out.positions[0, 0] == start.raw + k * per_step
        assert out.positions[0, 1] == s.positions[0, 1]


def test_overlapping_pair_kicks_exactly_antisymmetric():
    law = free_law()
    s = make_state([(30.0, 32.0), (32.0, 32.25)])  # separation < cutoff 3
    out = billiard.step(s, law, DT)
    kick0 = out.positions[0] - s.positions[0]
    kick1 = out.positions[1] - s.positions[1]
    assert kick0[0] != 0 or kick0[1] != 0
    assert np.array_equal(kick0, -kick1)


def test_kernel_matches_reference_bitwise():
    law = free_law()
    dt2 = mul_raw(DT.raw, DT.raw)
    args = (law.pair_stiffness.raw, law.cutoff2_raw, law.wall_stiffness.raw,
            law.wall_margin.raw, fx(64.0).raw, fx(64.0).raw, dt2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        pts = rng.uniform(4.0, 60.0, size=(6, 2))
        vel = rng.uniform(-1.0, 1.0, size=(6, 2))
        s = make_state([tuple(p) for p in pts],
                       prev=[tuple(p - v / 64.0) for p, v in zip(pts, vel)])
        pos = s.positions.copy()
        prev = s.prev_positions.copy()
        for _ in range(50):
            expected = _verlet.step_reference(pos, prev, *args)
            err, _ = _verlet.run_steps(pos, prev, 1, *args)
            assert err == _verlet.ERR_NONE
            assert np.array_equal(pos, expected)


# --- advance and trajectories ------------------------------------------------

def test_advance_zero_steps_identity():
    s = scenario_state()
    out, traj = billiard.advance(s, 0, free_law(), DT)
    assert out.phase_equal(s)
    assert len(traj.snapshots) == 1


def test_advance_composition_bitwise():
    s = scenario_state()
    law = free_law()
    once, _ = billiard.advance(s, 700, law, DT, record_every=100)
    a, _ = billiard.advance(s, 300, law, DT, record_every=100)
    b, _ = billiard.advance(a, 400, law, DT, record_every=100)
    assert once.phase_equal(b)
    assert once.step_index == b.step_index == 700


def test_recording_schedule():
    s = scenario_state()
    _, traj = billiard.advance(s, 350, free_law(), DT, record_every=10)
    assert len(traj.snapshots) == 36
    steps = [t for t, _ in traj.snapshots]
    assert steps[0] == 0 and steps[-1] == 350
    assert all(b > a for a, b in zip(steps, steps[1:]))
    # Final state recorded even when n_steps is not a multiple.
    _, ragged = billiard.advance(s, 35, free_law(), DT, record_every=10)
    assert [t for t, _ in ragged.snapshots] == [0, 10, 20, 30, 35]


def test_determinism_identical_trajectories():
    s = scenario_state(seed=9)
    law = free_law()
    _, t1 = billiard.advance(s, 2000, law, DT, record_every=100)
    _, t2 = billiard.advance(s, 2000, law, DT, record_every=100)
    for (k1, p1), (k2, p2) in zip(t1.snapshots, t2.snapshots):
        assert k1 == k2 and np.array_equal(p1, p2)


def test_translation_symmetry():
    # Valid away from walls: discs start clear of the cutoff and stay clear
    # of both boxes' wall margins for the whole run.
    law = free_law()
    pts = [(20.0, 20.0), (24.0, 21.0), (28.0, 19.5)]
    vels = [(1.0, 0.0), (-0.5, 0.25), (0.0, 0.0)]
    prev = [(x - vx / 64.0, y - vy / 64.0) for (x, y), (vx, vy) in zip(pts, vels)]
    s = make_state(pts, prev=prev)
    shift = fx(8.0).raw
    shifted = billiard.DiscState(
        positions=s.positions + shift, prev_positions=s.prev_positions + shift,
        radius=s.radius, box=s.box)
    a, _ = billiard.advance(s, 400, law, DT, record_every=400)
    b, _ = billiard.advance(shifted, 400, law, DT, record_every=400)
    assert np.array_equal(a.positions + shift, b.positions)
    assert np.array_equal(a.prev_positions + shift, b.prev_positions)


# --- reversal ----------------------------------------------------------------

def test_reverse_momenta_involution_and_rest():
    s = scenario_state()
    assert billiard.reverse_momenta(billiard.reverse_momenta(s)).phase_equal(s)
    r = billiard.reverse_momenta(s)
    # Resting discs are unchanged by reversal.
    assert np.array_equal(r.positions[:15], s.positions[:15])


@pytest.mark.parametrize("n_steps,seed", [(1, 0), (137, 1), (5000, 2), (22400, 3)])
def test_exact_reversibility_theorem(n_steps, seed, warm_kernel):
    s = scenario_state(seed)
    law = free_law()
    fwd, _ = billiard.advance(s, n_steps, law, DT, record_every=n_steps)
    back, _ = billiard.advance(billiard.reverse_momenta(fwd), n_steps, law, DT,
                               record_every=n_steps)
    assert billiard.reverse_momenta(back).phase_equal(s)


def test_entropy_trend_from_order(warm_kernel):
    cfg = BilliardConfig()
    law = cfg.force_law()
    positive = 0
    for seed in range(20):
        s = cfg.initial_state(seed)
        _, traj = billiard.advance(s, cfg.n_steps, law, cfg.dt,
                                   record_every=cfg.record_every,
                                   graining=cfg.graining())
        if billiard.entropy_slope(traj.entropy_series) > 0:
            positive += 1
    assert positive >= 19


# --- perturbation ------------------------------------------------------------

def test_perturb_zero_is_identity():
    s = scenario_state()
    out = billiard.perturb(s, 3, (FixedPoint(0), FixedPoint(0)))
    assert out.phase_equal(s)


def test_perturb_shifts_one_ball_only():
    s = scenario_state()
    out = billiard.perturb(s, 2, (fx(0.5), fx(-0.25)))
    assert out.positions[2, 0] == s.positions[2, 0] + fx(0.5).raw
    assert out.prev_positions[2, 1] == s.prev_positions[2, 1] + fx(-0.25).raw
    mask = np.ones(16, dtype=bool)
    mask[2] = False
    assert np.array_equal(out.positions[mask], s.positions[mask])


def test_perturb_out_of_box_rejected():
    s = scenario_state()
    with pytest.raises(DomainError):
        billiard.perturb(s, 0, (fx(-50.0), fx(0.0)))
    with pytest.raises(DomainError):
        billiard.perturb(s, 20, (fx(0.1), fx(0.0)))


# --- export ------------------------------------------------------------------

def test_spacetime_export_counts():
    s = make_state([(10.0, 10.0), (20.0, 20.0)])
    _, traj = billiard.advance(s, 0, free_law(), DT)
    assert len(billiard.spacetime_export(traj)) == 2
    s16 = scenario_state()
    _, traj16 = billiard.advance(s16, 350, free_law(), DT, record_every=10)
    assert len(billiard.spacetime_export(traj16)) == 36 * 16


def test_trajectory_csv_roundtrip_bit_exact(tmp_path):
    s = scenario_state(seed=4)
    _, traj = billiard.advance(s, 640, free_law(), DT, record_every=64)
    path = tmp_path / "traj.csv"
    billiard.write_trajectory_csv(traj, path)
    rows = billiard.read_trajectory_csv(path)
    expected = [(t, b, x.raw, y.raw)
                for t, b, x, y in billiard.spacetime_export(traj)]
    assert rows == expected


def test_empty_trajectory_export_rejected():
    with pytest.raises(DomainError):
        billiard.spacetime_export(billiard.Trajectory([], []))


# --- failure modes -----------------------------------------------------------

def test_static_overflow_bounds_rejected():
    s = make_state([(32.0, 32.0)])
    law = billiard.ForceLaw(pair_stiffness=FixedPoint(1 << 45),
                            cutoff=FixedPoint(1 << 40),
                            wall_stiffness=fx(16.0), wall_margin=fx(3.0))
    with pytest.raises(FixedPointOverflowError):
        billiard.advance(s, 1, law, DT)


def test_runaway_disc_reported_with_step():
    # A striker too fast for the wall ramp escapes; the engine must say when.
    weak = billiard.ForceLaw(pair_stiffness=fx(4.0), cutoff=fx(3.0),
                             wall_stiffness=fx(0.001), wall_margin=fx(3.0))
    s = billiard.init_ordered(0, fx(200.0), (fx(64.0), fx(64.0)), fx(1.5),
                              rng_seed=1, dt=DT)
    with pytest.raises(EngineError):
        billiard.advance(s, 4000, weak, DT, record_every=4000)


def test_state_validation():
    with pytest.raises(DomainError):
        make_state([(70.0, 10.0)])
    with pytest.raises(DomainError):
        billiard.DiscState(positions=np.zeros((0, 2), np.int64),
                           prev_positions=np.zeros((0, 2), np.int64),
                           radius=fx(1.0), box=(fx(10.0), fx(10.0)))
