"""Command-line entry point.

    arrow-lab run <scenario> [--seed N] [--config FILE] [--out DIR]
    arrow-lab ensemble <scenario> --runs N [--parallel K] [--seed N]
                       [--config FILE] [--out DIR]
    arrow-lab classify <file.json>

Exit codes: 0 success, 1 scenario assertion failure, 2 usage error.
The ARROWLAB_OUT environment variable overrides the default output
directory; an explicit --out beats both.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ArrowLabError, ConfigError
from .ensemble import ensemble
from .scenarios import SCENARIO_NAMES, default_config, load_config_file, run_scenario
from .topology import classify as classify_ts
from .topology import transition_system_from_json

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arrow-lab",
        description="Scenario runner for the time-arrow laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one named scenario")
    run_p.add_argument("scenario", choices=SCENARIO_NAMES)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--config", default=None, help="JSON config file")
    run_p.add_argument("--out", default=None, help="output directory")

    ens_p = sub.add_parser("ensemble", help="run many seeds and aggregate")
    ens_p.add_argument("scenario", choices=SCENARIO_NAMES)
    ens_p.add_argument("--runs", type=int, required=True)
    ens_p.add_argument("--parallel", type=int, default=1)
    ens_p.add_argument("--seed", type=int, default=None)
    ens_p.add_argument("--config", default=None, help="JSON config file")
    ens_p.add_argument("--out", default=None, help="output directory")

    cls_p = sub.add_parser("classify", help="classify a transition system")
    cls_p.add_argument("file", help="transition-system JSON file")
    return parser


def _resolve_config(args):
    if args.config is not None:
        cfg = load_config_file(args.config, args.scenario, seed=args.seed)
    else:
        cfg = default_config(args.scenario,
                             seed=args.seed if args.seed is not None else 1)
    return cfg


def _resolve_out(args, cfg, suffix: str) -> str:
    if args.out is not None:
        return args.out
    env = os.environ.get("ARROWLAB_OUT")
    if env:
        return env
    if cfg.out_dir is not None:
        return cfg.out_dir
    return os.path.join("runs", suffix)


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args, cfg, f"{cfg.scenario}-seed{cfg.seed}")
    manifest = run_scenario(cfg, out)
    print(f"scenario {manifest.scenario} seed {manifest.seed} -> {out}")
    for name, value in manifest.metrics.items():
        print(f"  {name} = {value}")
    for name, ok in manifest.assertions.items():
        print(f"  assert {name}: {'ok' if ok else 'FAILED'}")
    return EXIT_OK if manifest.passed else EXIT_ASSERTION


def _cmd_ensemble(args) -> int:
    cfg = _resolve_config(args)
    out = _resolve_out(args, cfg, f"{cfg.scenario}-ensemble-seed{cfg.seed}")
    record = ensemble(cfg, args.runs, args.parallel, out)
    print(f"ensemble {cfg.scenario} x{args.runs} (base seed {cfg.seed}) -> {out}")
    for name, stats in record["metrics"].items():
        print(f"  {name}: mean {stats['mean']:.6g} std {stats['std']:.6g}")
    for name, passed in record["assertions"].items():
        print(f"  assert {name}: {passed}/{args.runs}")
    return EXIT_OK if record["all_passed"] else EXIT_ASSERTION


def _cmd_classify(args) -> int:
    ts = transition_system_from_json(args.file)
    print(classify_ts(ts).label)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "ensemble":
            return _cmd_ensemble(args)
        return _cmd_classify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArrowLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
