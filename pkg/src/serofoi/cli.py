"""Command line interface: ``serofoi <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .config import ExperimentConfig, dumps, load_config
from .data import load_serodata
from .errors import SeroFoiError
from .inference.likelihood import SeroDataset


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out", None) is not None:
        cfg = cfg.with_output(args.out)
    return cfg


def _dataset(args, cfg):
    if args.data is None:
        return SeroDataset(())
    # the toy strip is not a grid of unit cells; rows index its boxes instead
    boxes = cfg.design.boxes() if cfg.design.kind == "toy" else None
    return load_serodata(args.data, args.convention, cfg.design.edge, boxes)


def cmd_simulate(args):
    cfg = _config(args)
    rng = experiments.spawn_rngs(cfg.sampler.seed, 1)[0]
    dataset, log = experiments.simulate(cfg, rng)
    experiments.write_simulation(cfg.output, dataset, log)
    print(f"wrote {len(dataset)} boxes, {dataset.n_tested} tests to {cfg.output}")


def cmd_fit(args):
    cfg = _config(args)
    dataset = _dataset(args, cfg)
    result = experiments.run_fit(cfg, dataset, cfg.output)
    cold = experiments.cold_chain(result)
    note = " (interrupted, partial output written)" if cold.interrupted else ""
    print(f"{len(cold)} iterations, acceptance {cold.acceptance_rate:.3f}{note}")
    return 130 if cold.interrupted else 0


def cmd_toy_convergence(args):
    cfg = _config(args)
    report, _ = experiments.run_toy_convergence(cfg, cfg.output)
    for row in report.rows:
        print(f"{row.cohorts_per_box:>4d}  W1={row.w1:.4f}  order={row.order:.3f}")


def cmd_predict(args):
    if args.holdout_year is None:
        raise SystemExit("predict needs --holdout-year")
    if args.data is None:
        raise SystemExit("predict needs --data")
    cfg = _config(args)
    cells, _ = experiments.run_holdout(cfg, _dataset(args, cfg), args.holdout_year, cfg.output)
    covered = sum(c.covered for c in cells)
    print(f"90% band covers {covered}/{len(cells)} cells of {args.holdout_year}")


def cmd_validate_config(args):
    cfg = load_config(args.config)
    sys.stdout.write(dumps(cfg))


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "toy-convergence": cmd_toy_convergence,
    "predict": cmd_predict,
    "validate-config": cmd_validate_config,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="serofoi",
        description="Force-of-infection inference from aggregated serological surveys.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=name == "validate-config",
                       help="TOML experiment configuration")
        if name == "validate-config":
            continue
        p.add_argument("--seed", type=int, help="master seed (overrides sampler.seed)")
        p.add_argument("--out", type=Path, help="output directory (overrides output)")
        if name in ("fit", "predict"):
            p.add_argument("--data", type=Path, help="CSV year,age,n_tested,n_seropositive")
            p.add_argument("--convention", choices=("infected", "susceptible"),
                           default="infected",
                           help="meaning of a seropositive test (default: infected)")
        if name == "predict":
            p.add_argument("--holdout-year", type=int, help="year left out of the fit")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args) or 0
    except (SeroFoiError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
