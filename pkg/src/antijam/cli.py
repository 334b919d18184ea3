"""Command-line entry point: ``antijam --config cfg.json --out results/``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .baselines import PolicyKind
from .errors import ConfigError
from .harness import ALGOS, ExperimentConfig, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAULT = 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="antijam", description="Train and evaluate anti-jamming defense policies.")
    ap.add_argument("--config", help="JSON experiment config (defaults apply to omitted keys)")
    ap.add_argument("--algo", choices=ALGOS)
    ap.add_argument("--policy", choices=[k.value for k in PolicyKind])
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--seed", type=int, help="run this single seed instead of the config's list")
    ap.add_argument("--out", default="results", help="output directory for CSV files")
    return ap


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    if args.algo is not None:
        cfg = replace(cfg, algo=args.algo)
    if args.policy is not None:
        cfg = replace(cfg, policy=PolicyKind(args.policy))
    if args.iterations is not None:
        if args.iterations < 0:
            raise ConfigError("iterations", "must be nonnegative")
        cfg = replace(cfg, iterations=args.iterations)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", "must be nonnegative")
        cfg = replace(cfg, seeds=(args.seed,))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_experiment(cfg, args.out)
    for r in results:
        status = f"FAULT {r.fault}" if r.fault else f"throughput {r.final.avg_throughput:.4f}"
        print(f"{r.path}: {status}")
    if results and all(r.fault for r in results):
        return EXIT_FAULT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
