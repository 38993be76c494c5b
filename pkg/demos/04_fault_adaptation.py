"""The headline experiment in miniature: hit a trained controller with the
tank-4 leak + engine-2 surge preset and compare three recovery strategies.

  baseline    keep the pre-fault parameters, continue plain updates
  meta_empty  meta re-initialization with an empty policy library
  meta_full   meta re-initialization seeded from a library of policies
              fine-tuned on other faults

The post-fault budget is trimmed so the run finishes in about a minute;
pass --full to keep the shipped scenario budget.

Run:  python3 demos/04_fault_adaptation.py [--seed S] [--full]
"""

import argparse
from dataclasses import replace

import numpy as np

from fueladapt.config import load_config
from fueladapt.harness import VARIANTS, build_complement, run_adaptation_trial, run_pretrain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--full", action="store_true", help="use the shipped post-fault budget")
    args = ap.parse_args()

    config = load_config("configs/tank4_engine2.cfg")
    if not args.full:
        config = replace(config, post_fault_steps=12_000)

    print(f"scenario {config.scenario_name}: fault preset {config.trial_fault}")
    print(f"pretraining {config.pretrain_steps} steps (seed {args.seed})...")
    ck = run_pretrain(config, args.seed)

    print(f"fine-tuning the library on {len(config.complement_faults)} other faults, "
          f"{config.complement_steps} steps each...")
    comp = build_complement(ck, config.complement_faults, config)
    print(f"library keeps {len(comp)} policies")

    results = {}
    for variant in VARIANTS:
        recs = run_adaptation_trial(
            ck,
            comp if variant == "meta_full" else None,
            config.trial_fault,
            variant,
            config,
            args.seed,
        )
        results[variant] = np.array([r.episodic_reward for r in recs])
        print(f"ran {variant}: {len(recs)} post-fault episodes")

    n = min(len(v) for v in results.values())
    early = min(25, n)
    print(f"\npost-fault comparison (seed {args.seed}):")
    print(f"{'variant':12s} {'first-' + str(early) + ' mean':>14s} {'variance':>10s} {'total':>10s}")
    for variant in sorted(results):
        v = results[variant]
        print(
            f"{variant:12s} {v[:early].mean():14.3f} {v[:early].var():10.3f} {v[:n].sum():10.1f}"
        )
    print("\nsingle seeds are noisy; the acceptance suite aggregates five")


if __name__ == "__main__":
    main()
