"""Alley-passing RL environment and a tabular Q-learning baseline.

Observations are min-pooled lidar sectors plus heading error and progress
along the alley axis. Reward is shaped by progress with terminal bonuses:

    r = 1.0 * delta_progress - 0.01 + (+100 on goal) + (-100 on collision)

Episodes are fully deterministic in the reset seed and the action sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidParameterError, ProtocolError
from .kinematics import ControlInput, KinematicState, clamp_control, step
from .robot_model import Dimensions
from .world import Footprint, LidarScan, OccupancyGrid, ScanConfig, build_alley, collide, downsample, raycast_scan

PROGRESS_WEIGHT = 1.0
STEP_PENALTY = 0.01
GOAL_BONUS = 100.0
COLLISION_PENALTY = 100.0

DEFAULT_ACTIONS = (
    (0.5, -0.5),
    (0.5, -0.25),
    (0.5, 0.0),
    (0.5, 0.25),
    (0.5, 0.5),
    (0.2, 0.0),
)

# Sector range bins {near, mid, far} and heading-error bins for the tabular state.
RANGE_BIN_EDGES = (0.5, 1.5)
HEADING_BIN_EDGES = (-0.2, -0.05, 0.05, 0.2)


@dataclass(frozen=True)
class Observation:
    sectors: tuple[float, ...]
    heading_error: float
    progress: float


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    reason: str  # goal | collision | timeout | running


@dataclass(frozen=True)
class AlleyEnvConfig:
    alley_width: float = 1.2
    alley_length: float = 8.0
    resolution: float = 0.05
    k_sectors: int = 8
    num_beams: int = 72
    max_range: float = 10.0
    control_period: float = 0.1
    substep_dt: float = 0.01
    timeout_steps: int = 500
    lateral_jitter: float = 0.1
    heading_jitter: float = 0.1
    actions: tuple[tuple[float, float], ...] = DEFAULT_ACTIONS
    dimensions: Dimensions = field(default_factory=Dimensions)

    def __post_init__(self):
        for v, phi in self.actions:
            clamped = clamp_control(ControlInput(v, phi))
            if clamped != ControlInput(v, phi):
                raise ConfigurationError(f"action ({v}, {phi}) exceeds control limits")


def reward(prev_progress: float, new_progress: float, termination: str) -> float:
    """Shaped step reward; `termination` is one of running/goal/collision/timeout."""
    r = PROGRESS_WEIGHT * (new_progress - prev_progress) - STEP_PENALTY
    if termination == "goal":
        r += GOAL_BONUS
    elif termination == "collision":
        r -= COLLISION_PENALTY
    return r


class AlleyEnv:
    """Episode environment for driving down a narrow corridor."""

    def __init__(self, config: AlleyEnvConfig | None = None):
        self.config = config or AlleyEnvConfig()
        cfg = self.config
        self.grid: OccupancyGrid = build_alley(
            cfg.alley_width, cfg.alley_length, cfg.resolution,
            robot_width_m=cfg.dimensions.shell_width)
        self.footprint = Footprint.from_dimensions(cfg.dimensions)
        self.scan_config = ScanConfig(num_beams=cfg.num_beams,
                                      max_range=cfg.max_range)
        self.state: KinematicState | None = None
        self.steps = 0
        self.done = True
        self._last_observation: Observation | None = None

    # -- episode protocol -------------------------------------------------

    def reset(self, seed: int = 0) -> Observation:
        cfg = self.config
        rng = np.random.default_rng(seed)
        lateral = rng.uniform(-cfg.lateral_jitter, cfg.lateral_jitter)
        heading = rng.uniform(-cfg.heading_jitter, cfg.heading_jitter)
        self.state = KinematicState(0.0, lateral, heading)
        if collide(self.grid, self.footprint, self.state):
            # Jitter pushed the shell into a wall; fall back to the centerline.
            self.state = KinematicState(0.0, 0.0, heading)
        self.steps = 0
        self.done = False
        self._last_observation = self._observe()
        return self._last_observation

    def env_step(self, action_index: int) -> StepResult:
        cfg = self.config
        if not (0 <= action_index < len(cfg.actions)):
            raise InvalidParameterError(f"action index {action_index} out of range")
        v, phi = cfg.actions[action_index]
        return self.step_control(v, phi)

    def step_control(self, v: float, phi: float) -> StepResult:
        """Apply a clamped (v, phi) for one control period."""
        if self.done or self.state is None:
            raise ProtocolError("step called on a finished episode")
        cfg = self.config
        control = clamp_control(ControlInput(v, phi))
        prev_progress = self.state.x

        n_sub = max(1, int(round(cfg.control_period / cfg.substep_dt)))
        state = self.state
        collided = False
        for _ in range(n_sub):
            state = step(state, control, cfg.substep_dt, cfg.dimensions.wheelbase)
            if collide(self.grid, self.footprint, state):
                collided = True
                break
        self.state = state
        self.steps += 1

        if state.x >= cfg.alley_length and not collided:
            reason = "goal"
        elif collided:
            reason = "collision"
        elif self.steps >= cfg.timeout_steps:
            reason = "timeout"
        else:
            reason = "running"
        self.done = reason != "running"

        if reason == "collision":
            # Never scan from an intersecting pose; reuse the last observation.
            obs = self._last_observation
        else:
            obs = self._observe()
        self._last_observation = obs
        r = reward(prev_progress, state.x, reason)
        return StepResult(obs, r, self.done, reason)

    def _observe(self) -> Observation:
        cfg = self.config
        scan: LidarScan = raycast_scan(self.grid, self.state, self.scan_config)
        sectors = tuple(float(s) for s in downsample(scan, cfg.k_sectors))
        return Observation(sectors=sectors,
                           heading_error=self.state.theta,
                           progress=self.state.x)

    @property
    def n_actions(self) -> int:
        return len(self.config.actions)


def discretize(obs: Observation) -> int:
    """Tabular state id: ternary-coded sectors plus a heading bin."""
    code = 0
    for r in obs.sectors:
        if r < RANGE_BIN_EDGES[0]:
            b = 0
        elif r < RANGE_BIN_EDGES[1]:
            b = 1
        else:
            b = 2
        code = code * 3 + b
    hbin = 0
    for edge in HEADING_BIN_EDGES:
        if obs.heading_error >= edge:
            hbin += 1
    return code * (len(HEADING_BIN_EDGES) + 1) + hbin


@dataclass
class QTrainResult:
    q_table: dict[int, np.ndarray]
    log: list[tuple[int, float, bool]]  # (episode, return, success)


def _greedy_action(q_row: np.ndarray) -> int:
    return int(np.argmax(q_row))


def q_learning_train(episodes: int = 5000, alpha: float = 0.1,
                     gamma: float = 0.95, eps_start: float = 1.0,
                     eps_end: float = 0.05, eps_decay_fraction: float = 0.8,
                     seed: int = 0,
                     env: AlleyEnv | None = None) -> QTrainResult:
    """Tabular Q-learning on the alley task with a linear epsilon schedule."""
    if not (0.0 < alpha <= 1.0):
        raise ConfigurationError("alpha must be in (0, 1]")
    if not (0.0 <= gamma <= 1.0):
        raise ConfigurationError("gamma must be in [0, 1]")
    if episodes < 1:
        raise ConfigurationError("episodes must be >= 1")

    env = env or AlleyEnv()
    rng = np.random.default_rng(seed)
    n_actions = env.n_actions
    q_table: dict[int, np.ndarray] = {}

    def q_row(state_id: int) -> np.ndarray:
        row = q_table.get(state_id)
        if row is None:
            row = np.zeros(n_actions)
            q_table[state_id] = row
        return row

    decay_span = max(1, int(episodes * eps_decay_fraction))
    log = []
    for ep in range(episodes):
        eps = eps_start + (eps_end - eps_start) * min(1.0, ep / decay_span)
        obs = env.reset(seed=int(rng.integers(0, 2**31 - 1)))
        state_id = discretize(obs)
        total = 0.0
        success = False
        while True:
            if rng.random() < eps:
                action = int(rng.integers(0, n_actions))
            else:
                action = _greedy_action(q_row(state_id))
            result = env.env_step(action)
            total += result.reward
            next_id = discretize(result.observation)
            target = result.reward
            if not result.done:
                target += gamma * float(q_row(next_id).max())
            row = q_row(state_id)
            row[action] += alpha * (target - row[action])
            state_id = next_id
            if result.done:
                success = result.reason == "goal"
                break
        log.append((ep, total, success))
    return QTrainResult(q_table=q_table, log=log)


def evaluate_policy(q_table: dict[int, np.ndarray], episodes: int = 100,
                    seed: int = 1_000_000,
                    env: AlleyEnv | None = None) -> tuple[float, list[float]]:
    """Greedy rollout success rate and per-episode returns."""
    env = env or AlleyEnv()
    n_actions = env.n_actions
    zero = np.zeros(n_actions)
    returns = []
    successes = 0
    for ep in range(episodes):
        obs = env.reset(seed=seed + ep)
        total = 0.0
        while True:
            row = q_table.get(discretize(obs), zero)
            result = env.env_step(_greedy_action(row))
            total += result.reward
            obs = result.observation
            if result.done:
                if result.reason == "goal":
                    successes += 1
                break
        returns.append(total)
    return successes / episodes, returns


def save_policy(q_table: dict[int, np.ndarray], path):
    """Text triples `state_id action_id q_value`, sorted for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        for state_id in sorted(q_table):
            for action_id, value in enumerate(q_table[state_id]):
                fh.write(f"{state_id} {action_id} {float(value)!r}\n")


def load_policy(path, n_actions: int) -> dict[int, np.ndarray]:
    q_table: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            state_s, action_s, value_s = line.split()
            row = q_table.setdefault(int(state_s), np.zeros(n_actions))
            row[int(action_s)] = float(value_s)
    return q_table


def save_learning_curve(log, path):
    """CSV `episode,return,success` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("episode,return,success\n")
        for ep, total, success in log:
            fh.write(f"{ep},{total:.6f},{int(success)}\n")
