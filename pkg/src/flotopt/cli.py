"""Command-line interface: run one scenario, sweep a study, replay a manifest."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .experiments import (ACCURACY_LOG10_VARIANCE, STUDIES, ScenarioConfig,
                          ScenarioError, replay, run_scenario, run_sweep)
from .pomcp import PomcpConfig


def _parse_policies(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return ScenarioConfig.from_dict(json.load(fh))


def _apply_common(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    if args.replicates is not None:
        cfg = replace(cfg, replicates=args.replicates)
    if getattr(args, "policies", None):
        cfg = replace(cfg, policies=_parse_policies(args.policies))
    if getattr(args, "simulations", None):
        cfg = replace(cfg, pomcp=replace(cfg.pomcp, n_simulations=args.simulations))
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flotopt",
        description="Batch flotation optimization-under-uncertainty benchmark")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log per-replicate progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario")
    p_run.add_argument("--config", help="scenario config JSON file")
    p_run.add_argument("--accuracy", choices=sorted(ACCURACY_LOG10_VARIANCE),
                       help="model-accuracy level (sets error log-variance)")
    p_run.add_argument("--policies", help="comma-separated subset of pid,mpc,pomcp")
    p_run.add_argument("--replicates", type=int)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--measurements", type=int,
                       help="evenly spaced feedstock measurements (default: every step)")
    p_run.add_argument("--simulations", type=int,
                       help="POMCP simulations per decision")
    p_run.add_argument("--steps", action="store_true",
                       help="also write the per-timestep trace CSV")
    p_run.add_argument("--out-dir", required=True)

    p_sweep = sub.add_parser("sweep", help="run a full study")
    p_sweep.add_argument("study", choices=STUDIES)
    p_sweep.add_argument("--replicates", type=int)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--simulations", type=int)
    p_sweep.add_argument("--out-dir", required=True)

    p_replay = sub.add_parser("replay", help="re-run an emitted manifest")
    p_replay.add_argument("manifest")
    p_replay.add_argument("--out-dir", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s")

    try:
        if args.command == "run":
            cfg = _load_config(args.config) if args.config else ScenarioConfig()
            if args.accuracy:
                cfg = replace(cfg, name=f"accuracy-{args.accuracy}",
                              error_log10_variance=ACCURACY_LOG10_VARIANCE[args.accuracy])
            if args.measurements is not None:
                cfg = replace(cfg, measurement_n=args.measurements)
            cfg = _apply_common(cfg, args)
            run_scenario(cfg, out_dir=args.out_dir, write_steps=args.steps)
        elif args.command == "sweep":
            base = ScenarioConfig()
            if args.seed is not None:
                base = replace(base, base_seed=args.seed)
            if args.replicates is not None:
                base = replace(base, replicates=args.replicates)
            if args.simulations is not None:
                base = replace(base, pomcp=PomcpConfig(n_simulations=args.simulations))
            run_sweep(args.study, args.out_dir, base=base)
        elif args.command == "replay":
            replay(args.manifest, args.out_dir)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
