"""Train the valve controller from scratch on the healthy system and watch
the episodic reward climb past the do-nothing heuristic.

Run:  python3 demos/03_nominal_training.py [--steps N] [--seed S]
"""

import argparse

import numpy as np

from fueladapt.config import Config
from fueladapt.fuelsim import FuelEnv
from fueladapt.harness import run_pretrain
from fueladapt.policy import policy_init
from fueladapt.ppo import evaluate_return


def anchors(config, rng):
    """Reference scores: untrained sampling vs. keeping every valve shut."""

    def const(logit):
        a = policy_init(0)
        for w in a.action_net.weights:
            w[:] = 0.0
        for b in a.action_net.biases:
            b[:] = 0.0
        a.action_net.biases[-1][:] = logit
        return a

    random_score = evaluate_return(FuelEnv(config.env), const(0.0), 20, rng)
    closed_score = evaluate_return(FuelEnv(config.env), const(-50.0), 5, rng)
    return random_score, closed_score


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=30_000)
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()

    config = Config(pretrain_steps=args.steps)
    random_score, closed_score = anchors(config, np.random.default_rng(123))
    print(f"anchors: random policy {random_score:.2f}, all-valves-closed {closed_score:.2f}")

    records = []
    print(f"training {args.steps} steps on the nominal system (seed {args.seed})...")
    ck = run_pretrain(config, args.seed, records)

    rewards = [r.episodic_reward for r in records]
    block = max(1, len(rewards) // 8)
    for i in range(0, len(rewards), block):
        chunk = rewards[i : i + block]
        print(f"  episodes {i:4d}-{i + len(chunk) - 1:4d}: mean reward {np.mean(chunk):+8.3f}")

    final = float(np.mean(rewards[-10:]))
    verdict = "beats" if final > closed_score else "still below"
    print(f"\nfinal-10 mean {final:+.3f} ({verdict} the closed-valve heuristic)")
    print(f"checkpoint holds {ck.step_count} steps of training")


if __name__ == "__main__":
    main()
