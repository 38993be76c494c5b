"""Six-tank aircraft fuel-transfer simulator.

Tanks sit symmetrically about the aircraft centerline. Opening valves
lets fuel diffuse pairwise between open tanks (conductance set by the
summed valve resistances); each engine draws from its wing group,
draining the innermost nonempty tank first. Abrupt faults multiply a
valve resistance or an engine demand. The controller is rewarded for a
centered center of gravity, evenly distributed fuel, and closed valves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

N_TANKS = 6

# Left engine is fed by tanks 1-3, right engine by tanks 4-6; the pumps
# drain innermost (nearest centerline) first.
LEFT_DRAIN_ORDER = (2, 1, 0)
RIGHT_DRAIN_ORDER = (3, 4, 5)

VALVE_FAULT = "valve_resistance"
ENGINE_FAULT = "engine_demand"

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class FaultSpec:
    """An abrupt multiplicative fault on one valve resistance or engine demand."""

    kind: str
    index: int  # tank 1-6 for valves, engine 1-2 for demands
    multiplier: float
    onset_step: int = 0

    def __post_init__(self):
        if self.kind not in (VALVE_FAULT, ENGINE_FAULT):
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.multiplier <= 1.0:
            raise ValueError("fault multiplier must exceed 1")
        limit = N_TANKS if self.kind == VALVE_FAULT else 2
        if not 1 <= self.index <= limit:
            raise ValueError(f"index {self.index} out of range for {self.kind}")


@dataclass(frozen=True)
class RewardWeights:
    w_cg: float = 1.0
    w_var: float = 1.0
    w_valve: float = 0.1

    def __post_init__(self):
        if min(self.w_cg, self.w_var, self.w_valve) < 0 or max(
            self.w_cg, self.w_var, self.w_valve
        ) == 0:
            raise ValueError("weights must be non-negative and not all zero")


@dataclass(frozen=True)
class EnvConfig:
    capacity: float = 100.0
    fill_frac: float = 0.8
    positions: tuple = (-3.0, -2.0, -1.0, 1.0, 2.0, 3.0)
    valve_resistance: float = 1.0
    engine_demand: float = 0.4
    k_flow: float = 1.0
    horizon: int = 200
    min_fuel_frac: float = 0.01
    reward: RewardWeights = RewardWeights()


@dataclass
class FuelTankSystem:
    levels: np.ndarray
    capacities: np.ndarray
    positions: np.ndarray
    valve_resistances: np.ndarray
    engine_demands: np.ndarray
    k_flow: float = 1.0
    dt: float = 1.0
    step_count: int = 0
    horizon: int = 200
    initial_fuel: float = 0.0
    min_fuel_frac: float = 0.01
    reward_weights: RewardWeights = RewardWeights()
    pending_faults: list = field(default_factory=list)
    applied_faults: list = field(default_factory=list)

    def copy(self) -> "FuelTankSystem":
        return replace(
            self,
            levels=self.levels.copy(),
            capacities=self.capacities.copy(),
            positions=self.positions.copy(),
            valve_resistances=self.valve_resistances.copy(),
            engine_demands=self.engine_demands.copy(),
            pending_faults=list(self.pending_faults),
            applied_faults=list(self.applied_faults),
        )


def env_reset(config: EnvConfig = EnvConfig(), rng: np.random.Generator | None = None) -> FuelTankSystem:
    """Fresh system at the configured fill level with no faults."""
    caps = np.full(N_TANKS, float(config.capacity))
    levels = caps * config.fill_frac
    return FuelTankSystem(
        levels=levels,
        capacities=caps,
        positions=np.asarray(config.positions, dtype=np.float64),
        valve_resistances=np.full(N_TANKS, float(config.valve_resistance)),
        engine_demands=np.array([config.engine_demand, config.engine_demand], dtype=np.float64),
        k_flow=config.k_flow,
        horizon=config.horizon,
        initial_fuel=float(levels.sum()),
        min_fuel_frac=config.min_fuel_frac,
        reward_weights=config.reward,
    )


def cg(state: FuelTankSystem) -> float:
    """Fuel-mass-weighted mean tank position; 0 by convention when empty."""
    total = state.levels.sum()
    if total <= 0.0:
        return 0.0
    return float(state.levels @ state.positions / total)


def observation(state: FuelTankSystem) -> np.ndarray:
    return np.clip(state.levels / state.capacities, 0.0, 1.0)


def reward(state: FuelTankSystem, action: np.ndarray) -> float:
    """Penalty for cg offset, uneven fuel, and open valves; 0 is the maximum."""
    w = state.reward_weights
    x_max = float(np.abs(state.positions).max())
    norm_levels = state.levels / state.capacities
    open_frac = float(np.sum(action > 0.5)) / N_TANKS
    return float(
        -w.w_cg * abs(cg(state)) / x_max - w.w_var * norm_levels.var() - w.w_valve * open_frac
    )


def _proposed_flows(state: FuelTankSystem, open_mask: np.ndarray) -> np.ndarray:
    """Pairwise downhill flows between open tanks; entry [i, j] moves fuel i -> j."""
    l = state.levels
    r = state.valve_resistances
    diff = l[:, None] - l[None, :]
    cond = state.k_flow / (r[:, None] + r[None, :])
    flows = np.where(diff > 0.0, diff * cond, 0.0)
    pair_open = open_mask[:, None] & open_mask[None, :]
    np.fill_diagonal(pair_open, False)
    return np.where(pair_open, flows, 0.0)


def _scale_to_feasible(levels: np.ndarray, caps: np.ndarray, flows: np.ndarray) -> np.ndarray:
    """Shrink flows proportionally so no tank is overdrawn or overfilled.

    Outflows of an overdrawn tank (and inflows of an overfull one) are
    scaled by a common factor; mass conservation is untouched because each
    pair flow is always applied to both of its endpoints. The zero-flow
    matrix is feasible, so the multiplicative shrinking always terminates.
    """
    flows = flows.copy()
    for _ in range(200):
        out = flows.sum(axis=1)
        inn = flows.sum(axis=0)
        new = levels - out + inn
        low = new < -_FEAS_TOL
        high = new > caps + _FEAS_TOL
        if not low.any() and not high.any():
            return flows
        if low.any():
            factor = np.ones(N_TANKS)
            factor[low] = np.maximum(0.0, (levels[low] + inn[low]) / out[low])
            flows *= np.minimum(factor, 1.0)[:, None]
            out = flows.sum(axis=1)
            inn = flows.sum(axis=0)
            new = levels - out + inn
            high = new > caps + _FEAS_TOL
        if high.any():
            factor = np.ones(N_TANKS)
            factor[high] = np.maximum(0.0, (caps[high] - levels[high] + out[high]) / inn[high])
            flows *= np.minimum(factor, 1.0)[None, :]
    return np.zeros_like(flows)


def _engine_draw(levels: np.ndarray, demands: np.ndarray) -> np.ndarray:
    levels = levels.copy()
    for engine, order in enumerate((LEFT_DRAIN_ORDER, RIGHT_DRAIN_ORDER)):
        need = demands[engine]
        for tank in order:
            take = min(need, levels[tank])
            levels[tank] -= take
            need -= take
            if need <= 0.0:
                break
    return levels


def env_step(state: FuelTankSystem, action: np.ndarray):
    """One explicit-Euler step: valve transfer, engine draw, clamp, fault onset.

    Returns (new state, observation, reward, done).
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (N_TANKS,):
        raise ValueError(f"action must have shape ({N_TANKS},), got {action.shape}")
    new = state.copy()

    open_mask = action > 0.5
    flows = _proposed_flows(new, open_mask)
    flows = _scale_to_feasible(new.levels, new.capacities, flows)
    new.levels = new.levels - flows.sum(axis=1) + flows.sum(axis=0)

    new.levels = _engine_draw(new.levels, new.engine_demands)
    new.levels = np.clip(new.levels, 0.0, new.capacities)

    new.step_count = state.step_count + 1
    still_pending = []
    for fault in new.pending_faults:
        if fault.onset_step == new.step_count:
            _apply_fault(new, fault)
        else:
            still_pending.append(fault)
    new.pending_faults = still_pending

    done = new.step_count >= new.horizon or new.levels.sum() < new.min_fuel_frac * new.initial_fuel
    return new, observation(new), reward(new, action), bool(done)


def _apply_fault(state: FuelTankSystem, fault: FaultSpec) -> None:
    if fault.kind == VALVE_FAULT:
        state.valve_resistances[fault.index - 1] *= fault.multiplier
    else:
        state.engine_demands[fault.index - 1] *= fault.multiplier
    state.applied_faults.append(fault)


def inject_fault(state: FuelTankSystem, fault: FaultSpec) -> FuelTankSystem:
    """Register a fault; it takes effect at its onset step (immediately if due)."""
    new = state.copy()
    if fault in new.applied_faults or fault in new.pending_faults:
        warnings.warn(f"fault {fault} already injected; ignoring duplicate")
        return new
    if fault.onset_step <= new.step_count:
        _apply_fault(new, fault)
    else:
        new.pending_faults.append(fault)
    return new


class FuelEnv:
    """Stateful wrapper around the functional simulator ops.

    Faults passed at construction are re-injected on every reset, so a
    degraded system stays degraded across episodes.
    """

    def __init__(self, config: EnvConfig = EnvConfig(), faults: tuple = ()):
        self.config = config
        self.faults = tuple(faults)
        self.state: FuelTankSystem | None = None

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        self.state = env_reset(self.config, rng)
        for fault in self.faults:
            self.state = inject_fault(self.state, fault)
        return observation(self.state)

    def step(self, action: np.ndarray):
        if self.state is None:
            raise RuntimeError("step() before reset()")
        self.state, obs, r, done = env_step(self.state, action)
        return obs, r, done
