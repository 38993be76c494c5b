"""Config file parsing: defaults, overrides, the fault DSL, and error reporting."""

import pytest

from fueladapt.config import (
    RANDOM_FAULT,
    Config,
    ConfigError,
    load_config,
    parse_config,
    parse_fault,
    parse_fault_group,
    parse_fault_list,
)
from fueladapt.fuelsim import ENGINE_FAULT, VALVE_FAULT, FaultSpec
from fueladapt.ppo import Hyperparameters


def test_empty_text_gives_defaults():
    assert parse_config("") == Config()
    assert parse_config("# only comments\n\n") == Config()


def test_default_config_file_matches_defaults():
    assert load_config("configs/default.cfg") == Config()


def test_scenario_config_overrides():
    cfg = load_config("configs/tank4_engine2.cfg")
    assert cfg.scenario_name == "tank4_engine2"
    assert cfg.env.k_flow == 0.1
    assert cfg.env.engine_demand == 0.7
    assert cfg.hp.alpha_out == 0.1
    assert cfg.hp.k_in == 4
    assert cfg.hp.k_out == 2
    assert cfg.complement_steps == 100_000
    assert cfg.post_fault_steps == 40_000
    assert cfg.seeds == (0, 1, 2, 3, 4)
    assert cfg.trial_fault == (
        FaultSpec(VALVE_FAULT, 4, 10.0),
        FaultSpec(ENGINE_FAULT, 2, 2.0),
    )
    assert cfg.complement_faults == (
        FaultSpec(VALVE_FAULT, 1, 10.0),
        FaultSpec(VALVE_FAULT, 3, 10.0),
        FaultSpec(VALVE_FAULT, 5, 10.0),
    )


def test_basic_overrides_and_comments():
    cfg = parse_config(
        """
        gamma = 0.95        # inline comment
        env.horizon = 100
        env.reward.w_valve = 0.2
        scenario.seeds = 3,4
        io.results = out/r.csv
        """
    )
    assert cfg.hp.gamma == 0.95
    assert cfg.env.horizon == 100
    assert cfg.env.reward.w_valve == 0.2
    assert cfg.seeds == (3, 4)
    assert cfg.results_path == "out/r.csv"


def test_adam_beta_overrides_merge():
    cfg = parse_config("adam_beta1 = 0.8\n")
    assert cfg.hp.adam_betas == (0.8, 0.999)
    cfg = parse_config("adam_beta1 = 0.8\nadam_beta2 = 0.99\n")
    assert cfg.hp.adam_betas == (0.8, 0.99)


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match="line 3.*unknown key.*bogus"):
        parse_config("\n\nbogus = 1\n")


def test_duplicate_key_reports_line():
    with pytest.raises(ConfigError, match="line 2.*duplicate"):
        parse_config("gamma = 0.9\ngamma = 0.8\n")


def test_bad_value_reports_line_and_key():
    with pytest.raises(ConfigError, match="line 1.*env.horizon"):
        parse_config("env.horizon = soon\n")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("gamma 0.9\n")


def test_fault_dsl():
    assert parse_fault("valve:4:10") == FaultSpec(VALVE_FAULT, 4, 10.0)
    assert parse_fault("engine:2:2") == FaultSpec(ENGINE_FAULT, 2, 2.0)
    assert parse_fault_group("valve:4:10+engine:2:2") == (
        FaultSpec(VALVE_FAULT, 4, 10.0),
        FaultSpec(ENGINE_FAULT, 2, 2.0),
    )
    assert parse_fault_list("valve:1:10,valve:3:10") == (
        FaultSpec(VALVE_FAULT, 1, 10.0),
        FaultSpec(VALVE_FAULT, 3, 10.0),
    )
    with pytest.raises(ConfigError, match="kind:number:multiplier"):
        parse_fault("valve:4")
    with pytest.raises(ConfigError, match="valve or engine"):
        parse_fault("pump:1:2")
    with pytest.raises(ConfigError):
        parse_fault("valve:9:10")  # no such tank
    with pytest.raises(ConfigError):
        parse_fault("valve:4:0.5")  # multiplier must exceed 1


def test_random_trial_fault_keyword():
    cfg = parse_config("scenario.trial_fault = random\n")
    assert cfg.trial_fault == RANDOM_FAULT


def test_config_budget_invariants():
    with pytest.raises(ConfigError, match="seeds"):
        Config(seeds=())
    with pytest.raises(ConfigError, match="pretrain"):
        Config(pretrain_steps=100, hp=Hyperparameters(t_update=2000))
    with pytest.raises(ConfigError, match="budget"):
        parse_config("scenario.post_fault_steps = 10\n")


def test_positions_length_checked():
    with pytest.raises(ConfigError, match="positions"):
        parse_config("env.positions = 1,2,3\n")
