"""Fault-adaptive reinforcement-learning control of an aircraft
fuel-transfer system, with a library of prior fault policies driving a
meta-learned re-initialization after abrupt faults."""

from .config import Config, load_config, parse_config
from .fuelsim import EnvConfig, FaultSpec, FuelEnv, RewardWeights
from .meta import Complement, MetaConfig, meta_update, populate_complement
from .policy import PolicyParams, policy_init
from .ppo import Hyperparameters, Memory, collect, evaluate_return, ppo_update

__all__ = [
    "Complement",
    "Config",
    "EnvConfig",
    "FaultSpec",
    "FuelEnv",
    "Hyperparameters",
    "Memory",
    "MetaConfig",
    "PolicyParams",
    "RewardWeights",
    "collect",
    "evaluate_return",
    "load_config",
    "meta_update",
    "parse_config",
    "policy_init",
    "populate_complement",
    "ppo_update",
]

__version__ = "0.1.0"
