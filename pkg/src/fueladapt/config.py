"""Flat key-value experiment configuration.

One `key = value` per line, `#` starts a comment, unknown or duplicate
keys are hard errors. Every training hyperparameter and every
environment constant is reachable; anything not mentioned keeps its
default. Tank and engine numbers in fault values are the 1-based labels
used everywhere else (tanks 1-6 left to right, engines 1 and 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .fuelsim import ENGINE_FAULT, N_TANKS, VALVE_FAULT, EnvConfig, FaultSpec, RewardWeights
from .ppo import Hyperparameters

RANDOM_FAULT = "random"

DEFAULT_COMPLEMENT_FAULTS = (
    FaultSpec(VALVE_FAULT, 1, 10.0),
    FaultSpec(VALVE_FAULT, 3, 10.0),
    FaultSpec(VALVE_FAULT, 5, 10.0),
)

DEFAULT_TRIAL_FAULT = (
    FaultSpec(VALVE_FAULT, 4, 10.0),
    FaultSpec(ENGINE_FAULT, 2, 2.0),
)


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    hp: Hyperparameters = field(default_factory=Hyperparameters)
    env: EnvConfig = field(default_factory=EnvConfig)
    scenario_name: str = "tank4_engine2"
    pretrain_steps: int = 50_000
    complement_steps: int = 20_000
    post_fault_steps: int = 100_000
    complement_faults: tuple = DEFAULT_COMPLEMENT_FAULTS
    # Either a tuple of FaultSpec applied together, or the string
    # "random" for a seeded draw at trial time.
    trial_fault: object = DEFAULT_TRIAL_FAULT
    seeds: tuple = (0, 1, 2, 3, 4)
    checkpoint_path: str = "runs/pretrain_s{seed}.ckpt"
    complement_path: str = "runs/complement_s{seed}.ckpt"
    results_path: str = "runs/results.csv"

    def __post_init__(self):
        if len(self.seeds) == 0:
            raise ConfigError("scenario.seeds must be non-empty")
        if self.pretrain_steps < self.hp.t_update:
            raise ConfigError("scenario.pretrain_steps must be >= t_update")
        if min(self.complement_steps, self.post_fault_steps) < self.hp.t_update:
            raise ConfigError("step budgets must be >= t_update")


def parse_fault(token: str) -> FaultSpec:
    """`kind:number:multiplier`, e.g. `valve:4:10` or `engine:2:2`."""
    parts = [p.strip() for p in token.split(":")]
    if len(parts) != 3:
        raise ConfigError(f"fault {token!r} is not kind:number:multiplier")
    kinds = {"valve": VALVE_FAULT, "engine": ENGINE_FAULT}
    if parts[0] not in kinds:
        raise ConfigError(f"fault kind {parts[0]!r}; expected valve or engine")
    try:
        return FaultSpec(kinds[parts[0]], int(parts[1]), float(parts[2]))
    except ValueError as e:
        raise ConfigError(f"fault {token!r}: {e}") from e


def parse_fault_group(text: str) -> tuple:
    """`+`-joined faults applied together, e.g. `valve:4:10+engine:2:2`."""
    return tuple(parse_fault(t) for t in text.split("+"))


def parse_fault_list(text: str) -> tuple:
    """Comma-separated single faults."""
    return tuple(parse_fault(t) for t in text.split(","))


def _parse_int(v: str) -> int:
    return int(v)


def _parse_float(v: str) -> float:
    return float(v)


def _parse_seeds(v: str) -> tuple:
    return tuple(int(t) for t in v.split(","))


def _parse_positions(v: str) -> tuple:
    out = tuple(float(t) for t in v.split(","))
    if len(out) != N_TANKS:
        raise ConfigError(f"env.positions needs {N_TANKS} values, got {len(out)}")
    return out


def _parse_trial(v: str):
    return RANDOM_FAULT if v.strip() == RANDOM_FAULT else parse_fault_group(v)


_HP_FIELDS = {f.name for f in fields(Hyperparameters)} - {"adam_betas"}

# key -> (section, field name, value parser)
_KEYS: dict = {}
for _name in _HP_FIELDS:
    _KEYS[_name] = ("hp", _name, _parse_int if _name in
                    ("epochs", "t_update", "k_in", "k_out", "s", "mem_capacity", "seed")
                    else _parse_float)
_KEYS["adam_beta1"] = ("hp", "adam_beta1", _parse_float)
_KEYS["adam_beta2"] = ("hp", "adam_beta2", _parse_float)
for _name, _p in (
    ("capacity", _parse_float), ("fill_frac", _parse_float),
    ("positions", _parse_positions), ("valve_resistance", _parse_float),
    ("engine_demand", _parse_float), ("k_flow", _parse_float),
    ("horizon", _parse_int), ("min_fuel_frac", _parse_float),
):
    _KEYS[f"env.{_name}"] = ("env", _name, _p)
for _name in ("w_cg", "w_var", "w_valve"):
    _KEYS[f"env.reward.{_name}"] = ("reward", _name, _parse_float)
_KEYS.update({
    "scenario.name": ("top", "scenario_name", str),
    "scenario.pretrain_steps": ("top", "pretrain_steps", _parse_int),
    "scenario.complement_steps": ("top", "complement_steps", _parse_int),
    "scenario.post_fault_steps": ("top", "post_fault_steps", _parse_int),
    "scenario.complement_faults": ("top", "complement_faults", parse_fault_list),
    "scenario.trial_fault": ("top", "trial_fault", _parse_trial),
    "scenario.seeds": ("top", "seeds", _parse_seeds),
    "io.checkpoint": ("top", "checkpoint_path", str),
    "io.complement": ("top", "complement_path", str),
    "io.results": ("top", "results_path", str),
})


def parse_config(text: str) -> Config:
    sections: dict = {"hp": {}, "env": {}, "reward": {}, "top": {}}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        section, name, parser = _KEYS[key]
        try:
            sections[section][name] = parser(value)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {e}") from e

    hp_kwargs = sections["hp"]
    b1 = hp_kwargs.pop("adam_beta1", None)
    b2 = hp_kwargs.pop("adam_beta2", None)
    if b1 is not None or b2 is not None:
        default = Hyperparameters().adam_betas
        hp_kwargs["adam_betas"] = (
            b1 if b1 is not None else default[0],
            b2 if b2 is not None else default[1],
        )
    env_kwargs = dict(sections["env"])
    if sections["reward"]:
        env_kwargs["reward"] = RewardWeights(**sections["reward"])
    try:
        return Config(
            hp=Hyperparameters(**hp_kwargs),
            env=EnvConfig(**env_kwargs),
            **sections["top"],
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
