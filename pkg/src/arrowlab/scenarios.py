"""Named, reproducible experiments tying the engines together.

Each scenario resolves a strict configuration (unknown fields rejected),
runs with seeded streams, writes its data files and plots into an output
directory, and records pass/fail assertions in the run manifest. Every
output byte is a function of (seed, config) only.

Random-stream allocation: stream 0 seeds initial-state jitter, stream 1 the
perturbation draw, stream 2 collapse dynamics, stream 3 the spin experiment.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from math import log
from pathlib import Path

import numpy as np

from . import billiard, grw, svg, topology
from .errors import ConfigError
from .fixedpoint import FixedPoint
from .graining import CoarseGraining, coarse_grain, write_histogram_csv
from .manifest import RunManifest, config_digest, manifest_timestamp, write_manifest
from .rng import rng_stream

CONFIG_VERSION = 1

STREAM_GRW = 2
STREAM_SG = 3

SCENARIO_NAMES = ("fig3a", "fig3b", "fig4a", "fig4b", "grw-gas",
                  "grw-reversal", "sg-xtopology", "classify")

# Two electron sources feeding two detectors through the same analyzer.
SPAB_SYSTEM = {
    "states": ["S_xplus", "P_xminus", "A_zplus", "B_zminus"],
    "edges": [["S_xplus", "A_zplus"], ["S_xplus", "B_zminus"],
              ["P_xminus", "A_zplus"], ["P_xminus", "B_zminus"]],
}


@dataclass
class BilliardConfig:
    n_cluster: int = 15
    striker_speed: float = 2.0
    box_w: float = 64.0
    box_h: float = 64.0
    radius: float = 1.5
    pair_stiffness: float = 4.0
    wall_stiffness: float = 16.0
    dt_bits: int = 6
    time_units: int = 350
    record_every: int = 64
    cells_per_axis: int = 8
    cluster_center_x: float = 33.5
    cluster_center_y: float = 35.5
    striker_x: float = 10.0
    aim_jitter: float = 2.0
    perturb_time_units: int = 175
    perturb_magnitude: float | None = None

    @property
    def dt(self) -> FixedPoint:
        return FixedPoint(1 << (20 - self.dt_bits))

    @property
    def n_steps(self) -> int:
        return self.time_units << self.dt_bits

    @property
    def box(self) -> tuple[FixedPoint, FixedPoint]:
        return (FixedPoint.from_float(self.box_w),
                FixedPoint.from_float(self.box_h))

    def graining(self) -> CoarseGraining:
        w, h = self.box
        cell = FixedPoint(-(-w.raw // self.cells_per_axis))
        return CoarseGraining(cell_size=cell, box_w=w, box_h=h)

    def force_law(self) -> billiard.ForceLaw:
        cutoff = FixedPoint.from_float(2.0 * self.radius)
        return billiard.ForceLaw(
            pair_stiffness=FixedPoint.from_float(self.pair_stiffness),
            cutoff=cutoff,
            wall_stiffness=FixedPoint.from_float(self.wall_stiffness),
            wall_margin=cutoff)

    def initial_state(self, seed: int) -> billiard.DiscState:
        return billiard.init_ordered(
            self.n_cluster, FixedPoint.from_float(self.striker_speed),
            self.box, FixedPoint.from_float(self.radius), seed, self.dt,
            cluster_center=(FixedPoint.from_float(self.cluster_center_x),
                            FixedPoint.from_float(self.cluster_center_y)),
            striker_x=FixedPoint.from_float(self.striker_x),
            aim_jitter=self.aim_jitter)

    def perturbation_magnitude(self) -> float:
        if self.perturb_magnitude is not None:
            return self.perturb_magnitude
        return self.graining().cell_size.to_float() / 16.0


@dataclass
class GrwConfig:
    n_particles: int = 16
    n_sites: int = 32
    region_start: int = 0
    region_stop: int = 16
    mode: str = "product"
    hopping: float = 1.0
    boundary: str = "periodic"
    dt: float = 2.0
    hit_prob: float = 0.01
    gaussian_width: float = 3.0
    steps: int = 400
    fidelity_threshold: float = 0.5

    def hamiltonian(self) -> grw.LatticeHamiltonian:
        return grw.LatticeHamiltonian.free(self.n_sites, self.hopping,
                                           self.boundary)

    def params(self) -> grw.GrwParams:
        return grw.GrwParams(hit_prob=self.hit_prob,
                             gaussian_width=self.gaussian_width)

    def initial_state(self) -> grw.WaveFunction:
        return grw.init_gas(self.n_particles, self.n_sites,
                            (self.region_start, self.region_stop), self.mode)


@dataclass
class SgConfig:
    trials: int = 10_000
    tolerance: float = 0.02


@dataclass
class ClassifyConfig:
    transition_system: dict = field(default_factory=lambda: dict(SPAB_SYSTEM))


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 1
    out_dir: str | None = None
    config_version: int = CONFIG_VERSION
    billiard: BilliardConfig = field(default_factory=BilliardConfig)
    grw: GrwConfig = field(default_factory=GrwConfig)
    sg: SgConfig = field(default_factory=SgConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)


# Scenario-specific default overrides, applied before user overrides.
_SCENARIO_DEFAULTS: dict[str, dict] = {
    "grw-reversal": {"grw": {"n_particles": 8, "hit_prob": 0.05, "steps": 200}},
}


def default_config(scenario: str, seed: int = 1) -> ScenarioConfig:
    if scenario not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {scenario!r}; "
                          f"expected one of {', '.join(SCENARIO_NAMES)}")
    cfg = ScenarioConfig(scenario=scenario, seed=seed)
    apply_overrides(cfg, _SCENARIO_DEFAULTS.get(scenario, {}))
    return cfg


_SECTIONS = {"billiard": BilliardConfig, "grw": GrwConfig, "sg": SgConfig,
             "classify": ClassifyConfig}
_TOP_LEVEL = {"scenario", "seed", "out_dir", "config_version"} | set(_SECTIONS)


def apply_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Merge a (possibly nested) override dict; unknown fields are errors."""
    unknown = set(overrides) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    if "config_version" in overrides and overrides["config_version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version "
                          f"{overrides['config_version']}; this build expects "
                          f"{CONFIG_VERSION}")
    if "scenario" in overrides and overrides["scenario"] != cfg.scenario:
        raise ConfigError(f"config is for scenario {overrides['scenario']!r}, "
                          f"not {cfg.scenario!r}")
    if "seed" in overrides:
        cfg.seed = int(overrides["seed"])
    if "out_dir" in overrides and overrides["out_dir"] is not None:
        cfg.out_dir = str(overrides["out_dir"])
    for name, cls in _SECTIONS.items():
        if name not in overrides:
            continue
        section = overrides[name]
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be an object")
        known = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - known
        if bad:
            raise ConfigError(f"unknown fields {sorted(bad)} in section {name!r}")
        target = getattr(cfg, name)
        for key, value in section.items():
            setattr(target, key, value)
    return cfg


def load_config_file(path, scenario: str, seed: int | None = None) -> ScenarioConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    cfg = default_config(scenario)
    apply_overrides(cfg, data)
    if seed is not None:
        cfg.seed = seed
    return cfg


def resolved_dict(cfg: ScenarioConfig) -> dict:
    """Full parameter record; excludes seed and out_dir, which are not part
    of the configuration identity."""
    data = dataclasses.asdict(cfg)
    data.pop("seed")
    data.pop("out_dir")
    return data


# --- scenario bodies ---------------------------------------------------------


def _billiard_outputs(out: Path, traj: billiard.Trajectory,
                      final_state: billiard.DiscState,
                      graining: CoarseGraining) -> list[str]:
    rows = billiard.spacetime_export(traj)
    billiard.write_trajectory_csv(traj, out / "trajectory.csv")
    billiard.write_entropy_csv(traj, out / "entropy.csv")
    (out / "spacetime.svg").write_bytes(svg.emit_spacetime_svg(rows))
    (out / "entropy.svg").write_bytes(
        svg.emit_series_svg(traj.entropy_series, title="entropy"))
    write_histogram_csv(coarse_grain(final_state.positions, graining),
                        out / "final_histogram.csv")
    return ["trajectory.csv", "entropy.csv", "spacetime.svg", "entropy.svg",
            "final_histogram.csv"]


def _run_fig3a(cfg: ScenarioConfig, out: Path):
    bc = cfg.billiard
    state0 = bc.initial_state(cfg.seed)
    graining = bc.graining()
    final, traj = billiard.advance(state0, bc.n_steps, bc.force_law(), bc.dt,
                                   bc.record_every, graining)
    series = traj.entropy_series
    s0, s_final = series[0][1], series[-1][1]
    window = max(1, len(series) // 10)
    metrics = {
        "entropy_initial": s0,
        "entropy_final": s_final,
        "entropy_slope": billiard.entropy_slope(series),
        "equilibrium_window_mean": float(np.mean([s for _, s in series[-window:]])),
    }
    assertions = {
        "entropy_increased": s_final > s0,
        "entropy_slope_positive": metrics["entropy_slope"] > 0,
    }
    outputs = _billiard_outputs(out, traj, final, graining)
    return outputs, assertions, metrics


def _echo_run(cfg: ScenarioConfig, perturb_at_reversal: bool):
    """Forward run, momentum reversal, optional perturbation, backward run."""
    bc = cfg.billiard
    law = bc.force_law()
    graining = bc.graining()
    state0 = bc.initial_state(cfg.seed)
    mid, traj = billiard.advance(state0, bc.n_steps, law, bc.dt,
                                 bc.record_every, graining)
    reversed_state = billiard.reverse_momenta(mid)
    perturb_info = {}
    if perturb_at_reversal:
        ball, disp = billiard.random_perturbation(
            cfg.seed, bc.perturbation_magnitude(), reversed_state.n_discs)
        reversed_state = billiard.perturb(reversed_state, ball, disp)
        perturb_info = {"perturbed_ball": ball}
    final, back_traj = billiard.advance(reversed_state, bc.n_steps, law, bc.dt,
                                        bc.record_every, graining)
    traj.extend(back_traj)
    # Exact recovery means the final state is the time-mirror of the start:
    # cluster discs (at rest initially) sit at their exact initial positions
    # and every velocity is exactly negated.
    recovered = final.phase_equal(billiard.reverse_momenta(state0))
    return state0, final, traj, recovered, perturb_info, graining


def _run_fig3b(cfg: ScenarioConfig, out: Path):
    state0, final, traj, recovered, _, graining = _echo_run(cfg, False)
    s0 = traj.entropy_series[0][1]
    s_final = traj.entropy_series[-1][1]
    metrics = {"entropy_initial": s0, "entropy_final": s_final}
    assertions = {"recovered": recovered,
                  "entropy_returned": s_final == s0}
    outputs = _billiard_outputs(out, traj, final, graining)
    return outputs, assertions, metrics


def _run_fig4a(cfg: ScenarioConfig, out: Path):
    bc = cfg.billiard
    law = bc.force_law()
    graining = bc.graining()
    state0 = bc.initial_state(cfg.seed)
    n_before = min(bc.perturb_time_units << bc.dt_bits, bc.n_steps)
    mid, traj = billiard.advance(state0, n_before, law, bc.dt,
                                 bc.record_every, graining)
    ball, disp = billiard.random_perturbation(
        cfg.seed, bc.perturbation_magnitude(), mid.n_discs)
    mid = billiard.perturb(mid, ball, disp)
    final, rest = billiard.advance(mid, bc.n_steps - n_before, law, bc.dt,
                                   bc.record_every, graining)
    traj.extend(rest)
    series = traj.entropy_series
    metrics = {
        "entropy_initial": series[0][1],
        "entropy_final": series[-1][1],
        "entropy_slope": billiard.entropy_slope(series),
        "perturbed_ball": ball,
        "perturb_step": n_before,
    }
    assertions = {"entropy_increased": series[-1][1] > series[0][1]}
    outputs = _billiard_outputs(out, traj, final, graining)
    return outputs, assertions, metrics


def _run_fig4b(cfg: ScenarioConfig, out: Path):
    state0, final, traj, recovered, perturb_info, graining = _echo_run(cfg, True)
    s0 = traj.entropy_series[0][1]
    s_final = traj.entropy_series[-1][1]
    metrics = {"entropy_initial": s0, "entropy_final": s_final,
               **perturb_info}
    assertions = {"recovery_failed": not recovered,
                  "entropy_stays_high": s_final > s0}
    outputs = _billiard_outputs(out, traj, final, graining)
    return outputs, assertions, metrics


def _grw_outputs(out: Path, traj: grw.GrwTrajectory) -> list[str]:
    grw.write_grw_csv(traj, out / "trajectory.csv")
    grw.write_hit_log_csv(traj.hit_log, out / "hits.csv")
    series = list(enumerate(traj.entropy))
    (out / "entropy.svg").write_bytes(
        svg.emit_series_svg(series, title="total marginal entropy"))
    return ["trajectory.csv", "hits.csv", "entropy.svg"]


def _run_grw_gas(cfg: ScenarioConfig, out: Path):
    gc = cfg.grw
    psi0 = gc.initial_state()
    traj = grw.run(psi0, gc.hamiltonian(), gc.params(), gc.steps, gc.dt,
                   rng_stream(cfg.seed, STREAM_GRW))
    window = max(1, (gc.steps + 1) // 10)
    window_mean = float(np.mean(traj.entropy[-window:]))
    max_entropy = gc.n_particles * log(gc.n_sites)
    metrics = {
        "entropy_initial": traj.entropy[0],
        "entropy_final": traj.entropy[-1],
        "final_window_mean_entropy": window_mean,
        "uniform_marginal_entropy": max_entropy,
        "equilibrium_ratio": window_mean / max_entropy,
        "energy_initial": traj.energy[0],
        "energy_final": traj.energy[-1],
        "total_hits": len(traj.hit_log),
        "final_norm": traj.norm[-1],
    }
    assertions = {
        "entropy_equilibrated": window_mean >= 0.85 * max_entropy,
        "norm_preserved": abs(traj.norm[-1] - 1.0) <= 1e-9,
    }
    outputs = _grw_outputs(out, traj)
    return outputs, assertions, metrics


def _run_grw_reversal(cfg: ScenarioConfig, out: Path):
    gc = cfg.grw
    psi0 = gc.initial_state()
    h = gc.hamiltonian()
    traj = grw.run(psi0, h, gc.params(), gc.steps, gc.dt,
                   rng_stream(cfg.seed, STREAM_GRW))
    retro = grw.reverse_run(traj.final_psi, h, gc.dt, traj.hit_log, gc.steps,
                            gc.params())
    fid = grw.fidelity(psi0, retro)
    metrics = {
        "reversal_fidelity": fid,
        "fidelity_threshold": gc.fidelity_threshold,
        "total_hits": len(traj.hit_log),
        "entropy_final": traj.entropy[-1],
    }
    assertions = {
        "irreversible": fid < gc.fidelity_threshold,
        "norm_preserved": abs(traj.norm[-1] - 1.0) <= 1e-9,
    }
    outputs = _grw_outputs(out, traj)
    return outputs, assertions, metrics


def _run_sg(cfg: ScenarioConfig, out: Path):
    sc = cfg.sg
    rng = rng_stream(cfg.seed, STREAM_SG)
    counts = {s: {topology.DETECTOR_Z_PLUS: 0, topology.DETECTOR_Z_MINUS: 0}
              for s in (topology.SOURCE_X_PLUS, topology.SOURCE_X_MINUS)}
    returns = 0
    for source in (topology.SOURCE_X_PLUS, topology.SOURCE_X_MINUS):
        for _ in range(sc.trials):
            outcome = topology.sg_forward(source, rng)
            counts[source][outcome.detector] += 1
            if source == topology.SOURCE_X_PLUS:
                if topology.sg_reverse(outcome, rng) == topology.RETURNS_TO_SOURCE:
                    returns += 1
    freq_a_s = counts[topology.SOURCE_X_PLUS][topology.DETECTOR_Z_PLUS] / sc.trials
    freq_a_p = counts[topology.SOURCE_X_MINUS][topology.DETECTOR_Z_PLUS] / sc.trials
    freq_return = returns / sc.trials

    ts = topology.sg_transition_system(sc.trials, rng)
    label = topology.classify(ts).label

    with open(out / "frequencies.csv", "w", newline="") as f:
        f.write("quantity,frequency\n")
        f.write(f"detector_A_from_S,{freq_a_s!r}\n")
        f.write(f"detector_A_from_P,{freq_a_p!r}\n")
        f.write(f"return_to_source,{freq_return!r}\n")
    with open(out / "transition_system.json", "w") as f:
        json.dump(topology.transition_system_to_dict(ts), f, indent=2,
                  sort_keys=True)
        f.write("\n")

    tol = sc.tolerance
    metrics = {
        "freq_detector_A_from_S": freq_a_s,
        "freq_detector_A_from_P": freq_a_p,
        "freq_return_to_source": freq_return,
        "trials": sc.trials,
        "topology": label,
    }
    assertions = {
        "detector_split_S": abs(freq_a_s - 0.5) <= tol,
        "detector_split_P": abs(freq_a_p - 0.5) <= tol,
        "reverse_split": abs(freq_return - 0.5) <= tol,
        "topology_is_x": label == "X",
    }
    return ["frequencies.csv", "transition_system.json"], assertions, metrics


def _run_classify(cfg: ScenarioConfig, out: Path):
    ts = topology.transition_system_from_dict(cfg.classify.transition_system)
    label = topology.classify(ts).label
    record = {
        "topology": label,
        "diagnostics": topology.branching_diagnostics(ts),
        "reversed_topology": topology.classify(topology.reverse(ts)).label,
    }
    with open(out / "classification.json", "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")
    metrics = {"topology": label,
               "reversed_topology": record["reversed_topology"]}
    return ["classification.json"], {}, metrics


_RUNNERS = {
    "fig3a": _run_fig3a,
    "fig3b": _run_fig3b,
    "fig4a": _run_fig4a,
    "fig4b": _run_fig4b,
    "grw-gas": _run_grw_gas,
    "grw-reversal": _run_grw_reversal,
    "sg-xtopology": _run_sg,
    "classify": _run_classify,
}


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> RunManifest:
    """Execute a scenario, write its outputs and manifest, return the manifest."""
    if cfg.scenario not in _RUNNERS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "runs"))
    out.mkdir(parents=True, exist_ok=True)
    outputs, assertions, metrics = _RUNNERS[cfg.scenario](cfg, out)
    manifest = RunManifest(
        seed=cfg.seed,
        scenario=cfg.scenario,
        config_digest=config_digest(resolved_dict(cfg)),
        outputs=sorted(outputs),
        timestamp=manifest_timestamp(),
        assertions=assertions,
        metrics=metrics,
    )
    write_manifest(manifest, out)
    return manifest
