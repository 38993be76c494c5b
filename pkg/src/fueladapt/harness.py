"""Experiment runner: nominal pre-training, library construction on
seeded faults, and post-fault adaptation trials with CSV output.

Every run is a pure function of (config, seed), so repeated runs of the
same scenario produce byte-identical result files.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .config import (
    DEFAULT_COMPLEMENT_FAULTS,
    DEFAULT_TRIAL_FAULT,
    RANDOM_FAULT,
    Config,
)
from .fuelsim import ENGINE_FAULT, N_TANKS, VALVE_FAULT, FaultSpec, FuelEnv
from .meta import Complement, MetaConfig, baseline_update, meta_update, populate_complement
from .nets import net_init
from .policy import PolicyParams, policy_init
from .ppo import Hyperparameters, Memory, collect, ppo_update
from .procmodel import DYNAMICS_SPEC, ProcessModel, ModelEnv, model_fit

log = logging.getLogger(__name__)

VARIANTS = ("meta_empty", "meta_full", "baseline")
PHASES = ("pretrain", "post_fault")

CSV_HEADER = "run_id,variant,seed,phase,episode_index,env_steps_so_far,episodic_reward"


@dataclass
class Scenario:
    """One named experiment: which faults build the library, which fault
    is sprung on the controller, and which seeds/variant to run."""

    name: str
    variant: str
    pretrain_steps: int = 50_000
    complement_faults: tuple = DEFAULT_COMPLEMENT_FAULTS
    trial_fault: object = DEFAULT_TRIAL_FAULT
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if len(self.seeds) == 0:
            raise ValueError("seeds must be non-empty")


@dataclass
class RunRecord:
    run_id: str
    variant: str
    seed: int
    phase: str
    episode_index: int
    env_steps_so_far: int
    episodic_reward: float


def scenario_from_config(config: Config, variant: str) -> Scenario:
    return Scenario(
        name=config.scenario_name,
        variant=variant,
        pretrain_steps=config.pretrain_steps,
        complement_faults=config.complement_faults,
        trial_fault=config.trial_fault,
        seeds=config.seeds,
    )


class _EpisodeTracker:
    """Turns a stream of collected transitions into per-episode records.

    Episodes cut off by a collection boundary are dropped (the system is
    reset before the next chunk anyway) but their steps still count.
    """

    def __init__(self, records: list, run_id: str, variant: str, seed: int, phase: str):
        self.records = records
        self.run_id = run_id
        self.variant = variant
        self.seed = seed
        self.phase = phase
        self.steps = 0
        self.episode = 0

    def consume(self, memory: Memory) -> None:
        acc = 0.0
        for t in memory:
            self.steps += 1
            acc += t.reward
            if t.done:
                self.records.append(
                    RunRecord(
                        run_id=self.run_id,
                        variant=self.variant,
                        seed=self.seed,
                        phase=self.phase,
                        episode_index=self.episode,
                        env_steps_so_far=self.steps,
                        episodic_reward=acc,
                    )
                )
                self.episode += 1
                acc = 0.0


def train_ppo(
    env,
    params: PolicyParams,
    hp: Hyperparameters,
    total_steps: int,
    rng: np.random.Generator,
    tracker: _EpisodeTracker | None = None,
) -> PolicyParams:
    """Alternate collection and clipped-surrogate updates for a step budget."""
    done = 0
    while done < total_steps:
        chunk = min(hp.t_update, total_steps - done)
        memory = collect(env, params, chunk, rng)
        if tracker is not None:
            tracker.consume(memory)
        params = ppo_update(params, memory, hp)
        done += chunk
    return params


def _clone_rng(rng: np.random.Generator) -> np.random.Generator:
    bg = type(rng.bit_generator)()
    bg.state = rng.bit_generator.state
    return np.random.Generator(bg)


def run_pretrain(config: Config, seed: int, records: list | None = None) -> Checkpoint:
    """PPO on the nominal system from a fresh seed; returns policy + rng state."""
    log.info("pretrain: seed=%d steps=%d", seed, config.pretrain_steps)
    rng = np.random.default_rng(seed)
    params = policy_init(seed)
    env = FuelEnv(config.env)
    tracker = None
    if records is not None:
        tracker = _EpisodeTracker(records, f"pretrain-s{seed}", "pretrain", seed, "pretrain")
    params = train_ppo(env, params, config.hp, config.pretrain_steps, rng, tracker)
    meta = {"seed": seed, "scenario": config.scenario_name}
    return Checkpoint(params=params, rng=rng, step_count=config.pretrain_steps, meta=meta)


def build_complement(checkpoint: Checkpoint, complement_faults, config: Config) -> Complement:
    """Fine-tune the pretrained policy against each seeded fault, then keep
    the s most mutually divergent results."""
    rng = _clone_rng(checkpoint.rng)
    candidates = []
    for fault in complement_faults:
        env = FuelEnv(config.env, faults=(fault,))
        tuned = train_ppo(env, checkpoint.params.copy(), config.hp, config.complement_steps, rng)
        candidates.append(tuned)
    probe = collect(FuelEnv(config.env), checkpoint.params, config.hp.t_update, rng)
    return populate_complement(candidates, config.hp.s, probe)


def sample_fault(rng: np.random.Generator, known_faults=()) -> FaultSpec:
    """Seeded draw of a novel fault: kind uniform, target outside the
    already-covered set, multiplier log-uniform in [2, 20]."""
    used = {(f.kind, f.index) for f in known_faults}
    options = [
        (VALVE_FAULT, i) for i in range(1, N_TANKS + 1) if (VALVE_FAULT, i) not in used
    ] + [(ENGINE_FAULT, i) for i in (1, 2) if (ENGINE_FAULT, i) not in used]
    if not options:
        raise ValueError("no fault targets left to sample")
    kinds = sorted({k for k, _ in options})
    kind = kinds[rng.integers(len(kinds))]
    indices = [i for k, i in options if k == kind]
    index = indices[rng.integers(len(indices))]
    multiplier = math.exp(rng.uniform(math.log(2.0), math.log(20.0)))
    return FaultSpec(kind, int(index), float(multiplier))


def _resolve_trial_fault(trial_fault, rng, known_faults) -> tuple:
    if trial_fault == RANDOM_FAULT:
        return (sample_fault(rng, known_faults),)
    if isinstance(trial_fault, FaultSpec):
        return (trial_fault,)
    return tuple(trial_fault)


def run_adaptation_trial(
    checkpoint: Checkpoint,
    complement: Complement | None,
    trial_fault,
    variant: str,
    config: Config,
    seed: int,
    use_model: bool = False,
) -> list:
    """Inject a fault and let one variant recover for the post-fault budget.

    All variants consume the same number of post-fault environment steps;
    they differ only in what they do with the first buffered batch.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    hp = config.hp
    if variant == "meta_empty" or complement is None:
        complement = Complement(members=[], max_size=hp.s)

    rng = np.random.default_rng(seed)
    faults = _resolve_trial_fault(trial_fault, rng, config.complement_faults)
    log.info("trial: variant=%s seed=%d faults=%s", variant, seed, faults)
    env = FuelEnv(config.env, faults=faults)
    params = checkpoint.params.copy()

    records: list = []
    tracker = _EpisodeTracker(records, f"{variant}-s{seed}", variant, seed, "post_fault")

    memory = collect(env, params, hp.t_update, rng, capacity=hp.mem_capacity)
    tracker.consume(memory)

    if variant in ("meta_empty", "meta_full"):
        mcfg = MetaConfig(
            alpha_in=hp.alpha_in, alpha_out=hp.alpha_out, k_in=hp.k_in, k_out=hp.k_out
        )
        model = ProcessModel(net_init(DYNAMICS_SPEC, seed)) if use_model else None
        params = meta_update(params, memory, complement, mcfg, hp, process_model=model, rng=rng)
    else:
        if use_model and complement.members:
            model = model_fit(ProcessModel(net_init(DYNAMICS_SPEC, seed)), memory, seed)
            synthetic = collect(
                ModelEnv(model, memory.obs_array()), params, hp.t_update, rng
            )
            iters = len(complement.members) * hp.k_in * hp.k_out
            if iters > 0:
                params = baseline_update(
                    params, synthetic, hp.alpha_out, iters, gamma=hp.gamma, clip_eps=hp.clip_eps
                )
        params = ppo_update(params, memory, hp)

    remaining = config.post_fault_steps - hp.t_update
    if remaining > 0:
        train_ppo(env, params, hp, remaining, rng, tracker)
    return records


def run_scenario(
    scenario: Scenario,
    config: Config,
    checkpoints: dict,
    complements: dict | None = None,
    use_model: bool = False,
) -> list:
    """All seeds of one variant; checkpoints/complements are keyed by seed."""
    records: list = []
    for seed in scenario.seeds:
        complement = None
        if scenario.variant == "meta_full" and complements is not None:
            complement = complements[seed]
        if scenario.variant == "baseline" and complements is not None:
            complement = complements.get(seed)
        records.extend(
            run_adaptation_trial(
                checkpoints[seed],
                complement,
                scenario.trial_fault,
                scenario.variant,
                config,
                seed,
                use_model=use_model,
            )
        )
    return records


def sort_records(records) -> list:
    return sorted(records, key=lambda r: (r.variant, r.seed, r.episode_index))


def emit_csv(records, path: str) -> None:
    """Header plus one row per record; rewards carry 6 decimal places."""
    if not records:
        raise ValueError("no records to write")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in sort_records(records):
            fh.write(
                f"{r.run_id},{r.variant},{r.seed},{r.phase},"
                f"{r.episode_index},{r.env_steps_so_far},{r.episodic_reward:.6f}\n"
            )


def read_csv(path: str) -> list:
    """Parse a results file back into records (inverse of emit_csv)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        records = []
        for line in fh:
            run_id, variant, seed, phase, ep, steps, rew = line.rstrip("\n").split(",")
            records.append(
                RunRecord(run_id, variant, int(seed), phase, int(ep), int(steps), float(rew))
            )
    return records
