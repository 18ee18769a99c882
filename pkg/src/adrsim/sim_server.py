"""TCP episode server: line-delimited JSON protocol for external agents.

One client per connection, one session per client, strictly sequential
request handling. Simulation time only advances on step requests, so a
replayed request transcript always yields an identical response transcript.

Requests (one JSON object per line):
    {"type": "hello"}
    {"type": "reset", "seed": N, "scenario": "alley"|"urban", "agents": 1|2}
    {"type": "step", "agent_id": ID, "v": V, "phi": PHI}
    {"type": "observe", "agent_id": ID}
    {"type": "map_share", "from_agent": ID, "to_agent": ID}
    {"type": "shutdown"}

Responses: ack / state / map / error; see docs/protocol.md for a transcript.
"""

from __future__ import annotations

import json
import math
import socketserver
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ProtocolError
from .kinematics import ControlInput, KinematicState, clamp_control, step, trajectory_csv_rows
from .rl_env import AlleyEnv, AlleyEnvConfig, reward as shaped_reward
from .robot_model import Dimensions
from .world import Footprint, OccupancyGrid, ScanConfig, UrbanConfig, build_urban, collide, downsample, raycast_scan

PROTOCOL_VERSION = "1"

ADR_ID = "adr"
AV_ID = "av"

# Stand-in road vehicle: same kinematics, car-scale footprint and speed.
AV_FOOTPRINT = Footprint(length=3.8, width=1.8, center_offset=1.25)
AV_V_MAX = 5.0
AV_WHEELBASE = 2.5

K_SECTORS = 8
CONTROL_PERIOD = 0.1
SUBSTEP_DT = 0.01
TIMEOUT_STEPS = 500

# Known-map encoding: 0 unknown, 1 seen free, 2 seen occupied.
_RLE_SYMBOLS = {0: "U", 1: "F", 2: "O"}
_RLE_VALUES = {v: k for k, v in _RLE_SYMBOLS.items()}


def rle_encode(known: np.ndarray) -> str:
    flat = known.ravel()
    out = []
    i = 0
    n = flat.shape[0]
    while i < n:
        j = i
        v = flat[i]
        while j < n and flat[j] == v:
            j += 1
        out.append(f"{j - i}{_RLE_SYMBOLS[int(v)]}")
        i = j
    return "".join(out)


def rle_decode(payload: str, shape: tuple[int, int]) -> np.ndarray:
    values = []
    count = ""
    for ch in payload:
        if ch.isdigit():
            count += ch
        else:
            values.extend([_RLE_VALUES[ch]] * int(count))
            count = ""
    return np.array(values, dtype=np.uint8).reshape(shape)


def merge_known_maps(recipient: np.ndarray, sender: np.ndarray) -> np.ndarray:
    """Cell-wise merge where occupied beats free beats unknown.

    Commutative and idempotent by construction.
    """
    return np.maximum(recipient, sender)


@dataclass
class Agent:
    agent_id: str
    state: KinematicState
    footprint: Footprint
    wheelbase: float
    v_max: float
    known: np.ndarray
    done: bool = False
    reason: str = "running"
    steps: int = 0
    episode_return: float = 0.0
    pending_map: bool = False
    times: list[float] = field(default_factory=list)
    states: list[KinematicState] = field(default_factory=list)
    controls: list[ControlInput] = field(default_factory=list)


class Session:
    """World plus registered agents for one connection."""

    def __init__(self, scenario: str, seed: int, n_agents: int,
                 alley_config: AlleyEnvConfig | None = None,
                 urban_config: UrbanConfig | None = None):
        if scenario not in ("alley", "urban"):
            raise ProtocolError(f"unknown scenario {scenario!r}")
        if n_agents not in (1, 2):
            raise ProtocolError("agents must be 1 or 2")
        self.scenario = scenario
        self.seed = seed
        self.alley_config = alley_config or AlleyEnvConfig()
        dims = self.alley_config.dimensions

        if scenario == "alley":
            env = AlleyEnv(self.alley_config)
            self.grid = env.grid
            self.goal_progress = self.alley_config.alley_length
            spawn = [(0.0, 0.0, 0.0), (-0.8, 0.0, 0.0)]
        else:
            cfg = urban_config or UrbanConfig(seed=seed)
            self.grid = build_urban(cfg)
            self.goal_progress = None
            spawn = [(cfg.start[0], cfg.start[1], 0.0),
                     (cfg.start[0], cfg.start[1] + 2.0, 0.0)]

        rng = np.random.default_rng(seed)
        self.scan_config = ScanConfig(num_beams=self.alley_config.num_beams,
                                      max_range=self.alley_config.max_range)
        self.agents: dict[str, Agent] = {}
        ids = (ADR_ID, AV_ID)[:n_agents]
        for agent_id, (x, y, theta) in zip(ids, spawn):
            if agent_id == ADR_ID:
                jitter_y = rng.uniform(-self.alley_config.lateral_jitter,
                                       self.alley_config.lateral_jitter)
                jitter_t = rng.uniform(-self.alley_config.heading_jitter,
                                       self.alley_config.heading_jitter)
                footprint = Footprint.from_dimensions(dims)
                agent = Agent(agent_id, KinematicState(x, y + jitter_y, theta + jitter_t),
                              footprint, dims.wheelbase, 2.0,
                              np.zeros_like(self.grid.cells))
                if collide(self.grid, footprint, agent.state):
                    agent.state = KinematicState(x, y, theta + jitter_t)
            else:
                agent = Agent(agent_id, KinematicState(x, y, theta),
                              AV_FOOTPRINT, AV_WHEELBASE, AV_V_MAX,
                              np.zeros_like(self.grid.cells))
            agent.times.append(0.0)
            agent.states.append(agent.state)
            agent.controls.append(ControlInput(0.0, 0.0))
            self.agents[agent_id] = agent

    def agent(self, agent_id) -> Agent:
        agent = self.agents.get(agent_id)
        if agent is None:
            raise KeyError(agent_id)
        return agent

    def _scan_and_record(self, agent: Agent) -> list[float]:
        """Scan from the agent pose, accumulating its known map."""
        angles = self.scan_config.beam_angles() + agent.state.theta
        ranges = np.empty(self.scan_config.num_beams)
        for i, angle in enumerate(angles):
            ranges[i] = kernels.cast_ray_mark(
                self.grid.cells, agent.known, self.grid.resolution,
                self.grid.origin_x, self.grid.origin_y,
                agent.state.x, agent.state.y, float(angle),
                self.scan_config.max_range)
        edges = np.linspace(0, len(ranges), K_SECTORS + 1).astype(int)
        return [float(ranges[edges[i]:edges[i + 1]].min()) for i in range(K_SECTORS)]

    def step_agent(self, agent_id: str, v: float, phi: float) -> dict:
        agent = self.agent(agent_id)
        if agent.done:
            raise ProtocolError("episode finished for this agent; reset first")
        control = clamp_control(ControlInput(v, phi), agent.v_max)
        prev_progress = agent.state.x
        n_sub = max(1, int(round(CONTROL_PERIOD / SUBSTEP_DT)))
        state = agent.state
        collided = False
        for _ in range(n_sub):
            state = step(state, control, SUBSTEP_DT, agent.wheelbase)
            if collide(self.grid, agent.footprint, state):
                collided = True
                break
        agent.state = state
        agent.steps += 1
        agent.times.append(agent.steps * CONTROL_PERIOD)
        agent.states.append(state)
        agent.controls.append(control)

        goal = (self.goal_progress is not None
                and state.x >= self.goal_progress and not collided)
        if goal:
            reason = "goal"
        elif collided:
            reason = "collision"
        elif agent.steps >= TIMEOUT_STEPS:
            reason = "timeout"
        else:
            reason = "running"
        agent.done = reason != "running"
        agent.reason = reason
        r = shaped_reward(prev_progress, state.x, reason)
        agent.episode_return += r
        sectors = self._scan_and_record(agent) if not collided else []
        return self._state_response(agent, sectors, r)

    def observe_agent(self, agent_id: str) -> dict:
        agent = self.agent(agent_id)
        if agent.pending_map:
            agent.pending_map = False
            return self.map_response(agent_id)
        sectors = self._scan_and_record(agent)
        return self._state_response(agent, sectors, 0.0)

    def _state_response(self, agent: Agent, sectors: list[float], r: float) -> dict:
        s = agent.state
        return {
            "type": "state",
            "agent_id": agent.agent_id,
            "x": s.x,
            "y": s.y,
            "theta": s.theta,
            "sectors": sectors,
            "reward": r,
            "episode_return": agent.episode_return,
            "done": agent.done,
            "reason": agent.reason,
            "step": agent.steps,
        }

    def map_share(self, from_id: str, to_id: str):
        if from_id == to_id:
            raise ValueError("cannot share a map with oneself")
        sender = self.agent(from_id)
        recipient = self.agent(to_id)
        recipient.known = merge_known_maps(recipient.known, sender.known)
        recipient.pending_map = True

    def map_response(self, agent_id: str) -> dict:
        agent = self.agent(agent_id)
        return {
            "type": "map",
            "agent_id": agent_id,
            "width": self.grid.width,
            "height": self.grid.height,
            "resolution": self.grid.resolution,
            "origin_x": self.grid.origin_x,
            "origin_y": self.grid.origin_y,
            "payload": rle_encode(agent.known),
        }

    def write_trajectories(self, out_dir):
        """One trajectory CSV per agent (kinematics log format)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for agent in self.agents.values():
            path = out_dir / f"trajectory_{agent.agent_id}.csv"
            rows = trajectory_csv_rows(agent.times, agent.states, agent.controls)
            path.write_text("\n".join(rows) + "\n", encoding="utf-8")
            paths.append(path)
        return paths


class EpisodeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, scenario: str = "alley", seed: int = 0,
                 log_dir=None, alley_config: AlleyEnvConfig | None = None,
                 urban_config: UrbanConfig | None = None):
        super().__init__(address, _Handler)
        self.default_scenario = scenario
        self.default_seed = seed
        self.log_dir = log_dir
        self.alley_config = alley_config
        self.urban_config = urban_config


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: EpisodeServer = self.server
        session: Session | None = None
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                request = json.loads(line)
                if not isinstance(request, dict):
                    raise ValueError("request must be a JSON object")
            except ValueError as exc:
                self._send({"type": "error", "code": "malformed",
                            "message": str(exc)})
                continue

            rtype = request.get("type")
            try:
                if rtype == "hello":
                    self._send({"type": "ack", "version": PROTOCOL_VERSION,
                                "scenario": server.default_scenario})
                elif rtype == "reset":
                    if session is not None and server.log_dir:
                        session.write_trajectories(server.log_dir)
                    session = Session(
                        scenario=request.get("scenario", server.default_scenario),
                        seed=int(request.get("seed", server.default_seed)),
                        n_agents=int(request.get("agents", 1)),
                        alley_config=server.alley_config,
                        urban_config=server.urban_config)
                    self._send({"type": "ack", "version": PROTOCOL_VERSION,
                                "scenario": session.scenario,
                                "seed": session.seed,
                                "agents": sorted(session.agents)})
                elif rtype == "step":
                    if session is None:
                        raise ProtocolError("step before reset")
                    response = session.step_agent(
                        request.get("agent_id", ADR_ID),
                        float(request.get("v", 0.0)),
                        float(request.get("phi", 0.0)))
                    self._send(response)
                elif rtype == "observe":
                    if session is None:
                        raise ProtocolError("observe before reset")
                    self._send(session.observe_agent(request.get("agent_id", ADR_ID)))
                elif rtype == "map_share":
                    if session is None:
                        raise ProtocolError("map_share before reset")
                    try:
                        session.map_share(request.get("from_agent"),
                                          request.get("to_agent"))
                    except ValueError as exc:
                        self._send({"type": "error", "code": "invalid_target",
                                    "message": str(exc)})
                        continue
                    self._send({"type": "ack", "version": PROTOCOL_VERSION})
                elif rtype == "shutdown":
                    self._send({"type": "ack", "version": PROTOCOL_VERSION})
                    if session is not None and server.log_dir:
                        session.write_trajectories(server.log_dir)
                    import threading

                    threading.Thread(target=server.shutdown, daemon=True).start()
                    return
                else:
                    self._send({"type": "error", "code": "unknown_request",
                                "message": f"unknown request type {rtype!r}"})
            except KeyError as exc:
                self._send({"type": "error", "code": "unknown_agent",
                            "message": f"unknown agent {exc.args[0]!r}"})
            except ProtocolError as exc:
                self._send({"type": "error", "code": "protocol_state",
                            "message": str(exc)})
            except OSError as exc:
                self._send({"type": "error", "code": "io_error",
                            "message": str(exc)})
        if session is not None and server.log_dir:
            session.write_trajectories(server.log_dir)

    def _send(self, obj: dict):
        self.wfile.write((json.dumps(obj, sort_keys=True) + "\n").encode("utf-8"))
        self.wfile.flush()


def serve(bind: str = "127.0.0.1:7601", scenario: str = "alley", seed: int = 0,
          log_dir=None) -> None:
    """Run the episode server until a shutdown request arrives."""
    host, _, port_s = bind.rpartition(":")
    server = EpisodeServer((host or "127.0.0.1", int(port_s)),
                           scenario=scenario, seed=seed, log_dir=log_dir)
    with server:
        server.serve_forever()
