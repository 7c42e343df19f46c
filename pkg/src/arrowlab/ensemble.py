"""Seeded ensembles of scenario runs with deterministic aggregation.

Run i uses child_seed(base_seed, i); results are merged in run order, so
the aggregate is byte-identical no matter how many workers executed it.
"""
from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ArrowLabError, ConfigError
from .manifest import RunManifest, config_digest
from .rng import child_seed
from .scenarios import ScenarioConfig, resolved_dict, run_scenario

ENSEMBLE_RECORD = "ensemble.json"


def _run_member(args) -> RunManifest:
    cfg, out_dir = args
    return run_scenario(cfg, out_dir)


def _member_configs(cfg: ScenarioConfig, n_runs: int, out_root: Path):
    members = []
    for i in range(n_runs):
        member = dataclasses.replace(cfg, seed=child_seed(cfg.seed, i))
        members.append((member, str(out_root / f"run_{i:04d}")))
    return members


def _aggregate(manifests: list[RunManifest]) -> dict:
    metrics: dict[str, dict] = {}
    names = [k for k in manifests[0].metrics
             if isinstance(manifests[0].metrics[k], (int, float))
             and not isinstance(manifests[0].metrics[k], bool)]
    for name in names:
        values = np.array([float(m.metrics[name]) for m in manifests])
        metrics[name] = {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            "median": float(np.median(values)),
            "min": float(values.min()),
            "max": float(values.max()),
        }
    assertions = {}
    for name in manifests[0].assertions:
        assertions[name] = sum(1 for m in manifests if m.assertions.get(name))
    return {"metrics": metrics, "assertions": assertions}


def ensemble(cfg: ScenarioConfig, n_runs: int, parallelism: int = 1,
             out_dir=None) -> dict:
    """Run n_runs independent seeds and aggregate their metrics."""
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    out_root = Path(out_dir if out_dir is not None else (cfg.out_dir or "runs"))
    out_root.mkdir(parents=True, exist_ok=True)
    members = _member_configs(cfg, n_runs, out_root)

    if parallelism == 1:
        manifests = [_run_member(m) for m in members]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            manifests = list(pool.map(_run_member, members))

    for i, manifest in enumerate(manifests):
        if manifest is None:
            raise ArrowLabError(f"ensemble run {i} produced no manifest")

    record = {
        "scenario": cfg.scenario,
        "base_seed": cfg.seed,
        "n_runs": n_runs,
        "config_digest": config_digest(resolved_dict(cfg)),
        "runs": [f"run_{i:04d}" for i in range(n_runs)],
        "all_passed": all(m.passed for m in manifests),
        **_aggregate(manifests),
    }
    with open(out_root / ENSEMBLE_RECORD, "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")
    return record
