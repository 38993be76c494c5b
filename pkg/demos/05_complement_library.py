"""How the policy library gets its members: fine-tune copies of one
controller under different faults, measure how differently they act, and
keep the most mutually divergent subset.

Run:  python3 demos/05_complement_library.py [--steps N]
"""

import argparse

import numpy as np

from fueladapt.config import Config
from fueladapt.fuelsim import ENGINE_FAULT, VALVE_FAULT, FaultSpec, FuelEnv
from fueladapt.harness import run_pretrain, train_ppo
from fueladapt.meta import populate_complement
from fueladapt.policy import policy_divergence
from fueladapt.ppo import collect


def fault_str(f: FaultSpec) -> str:
    kind = "valve" if f.kind == VALVE_FAULT else "engine"
    return f"{kind} {f.index} x{f.multiplier:g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=10_000)
    args = ap.parse_args()

    config = Config(pretrain_steps=args.steps)
    print(f"pretraining {args.steps} steps...")
    ck = run_pretrain(config, seed=1)

    pool_faults = [
        (FaultSpec(VALVE_FAULT, 1, 10.0),),
        (FaultSpec(VALVE_FAULT, 3, 10.0),),
        (FaultSpec(VALVE_FAULT, 5, 10.0),),
        (FaultSpec(ENGINE_FAULT, 1, 2.0),),
        (FaultSpec(ENGINE_FAULT, 2, 2.0), FaultSpec(VALVE_FAULT, 6, 5.0)),
    ]
    candidates = []
    for faults in pool_faults:
        rng = np.random.default_rng(ck.step_count)
        params = train_ppo(
            FuelEnv(config.env, faults=faults), ck.params.copy(), config.hp, args.steps // 2, rng
        )
        candidates.append(params)
        print(f"  fine-tuned a copy under {', '.join(fault_str(f) for f in faults)}")

    # divergences are measured where the controller actually operates
    probe = collect(FuelEnv(config.env), ck.params, 500, np.random.default_rng(7))
    n = len(candidates)
    div = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                div[i, j] = policy_divergence(candidates[i], candidates[j], probe)

    print("\npairwise divergence (mean KL between action distributions):")
    for i in range(n):
        print("  " + " ".join(f"{div[i, j]:7.3f}" for j in range(n)))

    comp = populate_complement(candidates, s=3, memory=probe)
    kept = [
        next(i for i, c in enumerate(candidates) if all(
            np.array_equal(a, b)
            for a, b in zip(c.action_net.weights, m.action_net.weights)
        ))
        for m in comp.members
    ]
    print(f"\nrow sums {np.round(div.sum(axis=1), 3)}")
    print(f"library keeps candidates {kept} (the {len(comp)} most mutually divergent)")


if __name__ == "__main__":
    main()
