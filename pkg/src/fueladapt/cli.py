"""Command-line entry points for the fault-adaptation experiments."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .checkpoint import load_checkpoint, load_complement, save_checkpoint, save_complement
from .config import Config, load_config
from .harness import (
    VARIANTS,
    build_complement,
    emit_csv,
    run_adaptation_trial,
    run_pretrain,
)
from .policy import ACTION_SPEC, VALUE_SPEC
from .report import render, summarize

log = logging.getLogger(__name__)


def _load(args) -> Config:
    return load_config(args.config) if args.config else Config()


def _seeds(args, config: Config) -> list:
    return [args.seed] if args.seed is not None else list(config.seeds)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def cmd_pretrain(args) -> int:
    config = _load(args)
    records: list = []
    for seed in _seeds(args, config):
        ckpt = run_pretrain(config, seed, records if args.out else None)
        path = config.checkpoint_path.format(seed=seed)
        _ensure_parent(path)
        save_checkpoint(path, ckpt.params, ckpt.rng, ckpt.step_count, ckpt.meta)
        print(f"saved {path}")
    if args.out:
        emit_csv(records, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_build_complement(args) -> int:
    config = _load(args)
    for seed in _seeds(args, config):
        ckpt = load_checkpoint(config.checkpoint_path.format(seed=seed))
        comp = build_complement(ckpt, config.complement_faults, config)
        path = config.complement_path.format(seed=seed)
        _ensure_parent(path)
        save_complement(path, comp, ACTION_SPEC, VALUE_SPEC)
        print(f"saved {path} ({len(comp.members)} members)")
    return 0


def cmd_adapt(args) -> int:
    config = _load(args)
    variants = [args.variant] if args.variant else list(VARIANTS)
    records: list = []
    for variant in variants:
        for seed in _seeds(args, config):
            ckpt = load_checkpoint(config.checkpoint_path.format(seed=seed))
            complement = None
            comp_path = config.complement_path.format(seed=seed)
            if variant == "meta_full":
                complement = load_complement(comp_path)
            elif variant == "baseline" and os.path.exists(comp_path):
                complement = load_complement(comp_path)
            records.extend(
                run_adaptation_trial(
                    ckpt, complement, config.trial_fault, variant, config, seed,
                    use_model=args.use_model,
                )
            )
    out = args.out or config.results_path
    emit_csv(records, out)
    print(f"wrote {out} ({len(records)} episodes)")
    return 0


def cmd_report(args) -> int:
    summaries = summarize(args.csv, window=args.window)
    scenario = os.path.splitext(os.path.basename(args.csv))[0]
    for path in render(summaries, args.out, scenario):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fueladapt",
        description="Fault-adaptive fuel-transfer control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="train the nominal policy and checkpoint it")
    p.add_argument("--config", help="config file path")
    p.add_argument("--seed", type=int, help="single seed (default: all configured seeds)")
    p.add_argument("--out", help="optional CSV of pretraining episodes")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("build-complement", help="fine-tune on seeded faults and keep a library")
    p.add_argument("--config", help="config file path")
    p.add_argument("--seed", type=int, help="single seed (default: all configured seeds)")
    p.set_defaults(func=cmd_build_complement)

    p = sub.add_parser("adapt", help="run post-fault adaptation trials")
    p.add_argument("--config", help="config file path")
    p.add_argument("--seed", type=int, help="single seed (default: all configured seeds)")
    p.add_argument("--variant", choices=VARIANTS, help="single variant (default: all)")
    p.add_argument("--use-model", action="store_true", help="fit and use a process model")
    p.add_argument("--out", help="results CSV path (default from config)")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("report", help="aggregate a results CSV into figures")
    p.add_argument("--csv", required=True, help="results CSV from adapt")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--window", type=int, default=10, help="moving-average window")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
