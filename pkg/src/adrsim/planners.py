"""Grid path planning (Dijkstra, A*) and the Dynamic Window Approach.

Global planners run on an inflated 8-connected grid with unit/diagonal move
costs scaled by resolution; A* uses the octile-distance heuristic and must
match Dijkstra's cost exactly. The DWA samples controls inside the reachable
velocity window, rolls each candidate out through the Ackermann kinematics,
discards colliding rollouts, and scores the rest on heading, clearance, and
speed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidParameterError
from .kinematics import (
    DEFAULT_V_MAX,
    ControlInput,
    KinematicState,
    clamp_control,
    normalize_angle,
    step,
)
from .robot_model import STEERING_LIMIT
from .world import Footprint, OccupancyGrid, collide

SQRT2 = math.sqrt(2.0)

# Fixed neighbor order keeps expansion sequences deterministic.
_NEIGHBORS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
              (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


@dataclass
class GridPath:
    cells: list[tuple[int, int]]  # (ix, iy)
    cost: float
    expanded: int = 0

    @property
    def reachable(self) -> bool:
        return True


@dataclass
class Unreachable:
    expanded: int = 0

    @property
    def reachable(self) -> bool:
        return False


def inflate(grid: OccupancyGrid, footprint: Footprint) -> OccupancyGrid:
    """Grow obstacles by half the footprint circumdiameter so the robot can
    be planned as a point."""
    radius_m = footprint.circumradius
    if radius_m <= 0:
        return grid.copy()
    return inflate_radius(grid, radius_m)


def inflate_radius(grid: OccupancyGrid, radius_m: float) -> OccupancyGrid:
    from scipy.ndimage import distance_transform_edt

    radius_cells = radius_m / grid.resolution
    if np.all(grid.cells):
        return grid.copy()
    dist = distance_transform_edt(grid.cells == 0)
    out = grid.copy()
    out.cells = np.where(dist <= radius_cells, 1, 0).astype(np.uint8)
    return out


def _search(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int],
            heuristic) -> GridPath | Unreachable:
    width, height = grid.width, grid.height
    cells = grid.cells

    def check_free(cell, label):
        ix, iy = cell
        if not grid.in_bounds(ix, iy) or cells[iy, ix]:
            raise InvalidParameterError(f"{label} cell {cell} is not free")

    check_free(start, "start")
    check_free(goal, "goal")
    if start == goal:
        return GridPath(cells=[start], cost=0.0, expanded=0)

    res = grid.resolution
    dist = {start: 0.0}
    parent: dict = {start: None}
    closed = set()
    expanded = 0
    # Heap entries: (f, row-major index, cell) for deterministic tie-breaking.
    heap = [(heuristic(start), start[1] * width + start[0], start)]
    while heap:
        f, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        closed.add(cell)
        expanded += 1
        if cell == goal:
            path = []
            cur = cell
            while cur is not None:
                path.append(cur)
                cur = parent[cur]
            path.reverse()
            return GridPath(cells=path, cost=dist[cell], expanded=expanded)
        cx, cy = cell
        g = dist[cell]
        for dx, dy, w in _NEIGHBORS:
            nx, ny = cx + dx, cy + dy
            if nx < 0 or nx >= width or ny < 0 or ny >= height:
                continue
            if cells[ny, nx]:
                continue
            ncell = (nx, ny)
            if ncell in closed:
                continue
            ng = g + w * res
            if ng < dist.get(ncell, math.inf) - 1e-15:
                dist[ncell] = ng
                parent[ncell] = cell
                heapq.heappush(heap, (ng + heuristic(ncell),
                                      ny * width + nx, ncell))
    return Unreachable(expanded=expanded)


def dijkstra(grid: OccupancyGrid, start: tuple[int, int],
             goal: tuple[int, int]) -> GridPath | Unreachable:
    return _search(grid, start, goal, lambda _cell: 0.0)


def astar(grid: OccupancyGrid, start: tuple[int, int],
          goal: tuple[int, int]) -> GridPath | Unreachable:
    gx, gy = goal
    res = grid.resolution

    def octile(cell):
        dx = abs(cell[0] - gx)
        dy = abs(cell[1] - gy)
        return res * (max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy))

    return _search(grid, start, goal, octile)


@dataclass(frozen=True)
class DwaConfig:
    v_samples: int = 11
    phi_samples: int = 21
    horizon: float = 2.0
    dt: float = 0.1
    weights: tuple[float, float, float] = (0.5, 0.3, 0.2)  # heading, clearance, velocity
    dv_max: float = 1.0  # m/s^2
    dphi_max: float = 1.5  # rad/s
    v_max: float = DEFAULT_V_MAX
    wheelbase: float = 0.530
    # Clearance rays cover a forward arc so side walls of a corridor do not
    # penalize driving along it.
    clearance_beams: int = 5
    clearance_fov: float = 2.0 * math.pi / 3.0
    clearance_range: float = 1.0

    def __post_init__(self):
        for name in ("v_samples", "phi_samples", "horizon", "dt", "dv_max",
                     "dphi_max", "v_max"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"DWA parameter {name} must be positive")
        total = sum(self.weights)
        if total <= 0:
            raise InvalidParameterError("DWA weights must have positive sum")
        object.__setattr__(self, "weights",
                           tuple(w / total for w in self.weights))


@dataclass(frozen=True)
class DwaResult:
    control: ControlInput
    score: float
    emergency_stop: bool


def dwa_candidates(current_u: ControlInput, cfg: DwaConfig):
    """Dynamic window: controls reachable within one command period."""
    v_lo = max(0.0, current_u.v - cfg.dv_max * cfg.dt)
    v_hi = min(cfg.v_max, current_u.v + cfg.dv_max * cfg.dt)
    p_lo = max(-STEERING_LIMIT, current_u.phi - cfg.dphi_max * cfg.dt)
    p_hi = min(STEERING_LIMIT, current_u.phi + cfg.dphi_max * cfg.dt)
    vs = np.linspace(v_lo, v_hi, cfg.v_samples)
    ps = np.linspace(p_lo, p_hi, cfg.phi_samples)
    return [ControlInput(float(v), float(p)) for v in vs for p in ps]


def score_candidate(end_pose, min_clearance: float, v: float,
                    goal_point: tuple[float, float], cfg: DwaConfig,
                    v_norm: float | None = None) -> float:
    """Weighted sum of heading-to-goal, normalized clearance, and speed.

    Speed is normalized by the fastest speed in the current window (v_norm)
    so the velocity term has full weight even when the window is narrow.
    """
    ex, ey, etheta = end_pose
    bearing = math.atan2(goal_point[1] - ey, goal_point[0] - ex)
    heading = 1.0 - abs(normalize_angle(bearing - etheta)) / math.pi
    clearance = min(min_clearance / cfg.clearance_range, 1.0)
    if v_norm is None:
        v_norm = cfg.v_max
    velocity = v / v_norm if v_norm > 0 else 0.0
    wh, wc, wv = cfg.weights
    return wh * heading + wc * clearance + wv * velocity


def dwa_step(state: KinematicState, current_u: ControlInput,
             grid: OccupancyGrid, footprint: Footprint,
             goal_point: tuple[float, float], cfg: DwaConfig) -> DwaResult:
    """Pick the best collision-free control in the dynamic window.

    Falls back to a flagged stop command when every candidate's rollout
    collides within the horizon.
    """
    n_steps = max(1, int(round(cfg.horizon / cfg.dt)))
    clearance_angles = np.linspace(-cfg.clearance_fov / 2.0,
                                   cfg.clearance_fov / 2.0, cfg.clearance_beams)
    candidates = dwa_candidates(current_u, cfg)
    v_norm = max(c.v for c in candidates)
    best = None
    best_score = -math.inf
    for cand in candidates:
        collided, min_clear, ex, ey, etheta = kernels.evaluate_rollout(
            grid.cells, grid.resolution, grid.origin_x, grid.origin_y,
            state.x, state.y, state.theta, cand.v, cand.phi,
            cfg.wheelbase, cfg.dt, n_steps,
            footprint.length / 2.0, footprint.width / 2.0,
            footprint.center_offset, clearance_angles, cfg.clearance_range)
        if collided:
            continue
        s = score_candidate((ex, ey, etheta), min_clear, cand.v, goal_point,
                            cfg, v_norm)
        # Ties go to the smallest |phi| (then earliest sample index): all
        # zero-velocity rollouts end at the same pose and score identically,
        # and preferring straighter steering lets a stopped robot center its
        # wheels instead of staying pinned at the window edge.
        if s > best_score + 1e-12 or (
                s > best_score - 1e-12
                and best is not None
                and abs(cand.phi) < abs(best.phi) - 1e-12):
            best_score = s
            best = cand
    if best is None:
        return DwaResult(ControlInput(0.0, 0.0), 0.0, emergency_stop=True)
    return DwaResult(best, best_score, emergency_stop=False)


@dataclass
class NavigationResult:
    reached: bool
    message: str
    times: list[float] = field(default_factory=list)
    states: list[KinematicState] = field(default_factory=list)
    controls: list[ControlInput] = field(default_factory=list)
    path_xy: list[tuple[float, float]] = field(default_factory=list)


def navigate(grid: OccupancyGrid, footprint: Footprint,
             start_pose: KinematicState, goal_xy: tuple[float, float],
             planner: str = "astar", dwa: DwaConfig | None = None,
             goal_tolerance: float = 0.2, lookahead: float = 1.5,
             max_steps: int = 3000, align_start: bool = True) -> NavigationResult:
    """Chain a global plan with DWA tracking of successive waypoints.

    With align_start the initial heading is turned onto the first path
    segment, as a deployed stack would plan it. A stagnation watchdog
    replans from the current pose when no progress is made.
    """
    cfg = dwa or DwaConfig()
    inflated = inflate(grid, footprint)
    goal_cell = inflated.world_to_cell(*goal_xy)
    plan_fn = {"astar": astar, "dijkstra": dijkstra}.get(planner)
    if plan_fn is None:
        raise InvalidParameterError(f"unknown planner {planner!r}")

    def nearest_free_cell(cell):
        ix0, iy0 = cell
        if inflated.in_bounds(ix0, iy0) and not inflated.cells[iy0, ix0]:
            return cell
        # Pose is inside the inflation band; snap to the closest plannable cell.
        max_r = int(math.ceil(1.0 / inflated.resolution))
        best = None
        best_d = math.inf
        for r in range(1, max_r + 1):
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    if max(abs(dx), abs(dy)) != r:
                        continue
                    ix, iy = ix0 + dx, iy0 + dy
                    if inflated.in_bounds(ix, iy) and not inflated.cells[iy, ix]:
                        d = dx * dx + dy * dy
                        if d < best_d:
                            best_d = d
                            best = (ix, iy)
            if best is not None:
                return best
        return cell

    def plan_from(x, y):
        cell = nearest_free_cell(inflated.world_to_cell(x, y))
        try:
            result = plan_fn(inflated, cell, goal_cell)
        except InvalidParameterError:
            return None
        if not result.reachable:
            return None
        wps = [inflated.cell_center(ix, iy) for ix, iy in result.cells]
        wps[-1] = goal_xy
        return wps

    waypoints = plan_from(start_pose.x, start_pose.y)
    if waypoints is None:
        return NavigationResult(False, "goal unreachable")

    state = start_pose
    if align_start and len(waypoints) > 1:
        ahead = min(len(waypoints) - 1, max(1, int(lookahead / grid.resolution)))
        tx, ty = waypoints[ahead]
        state = KinematicState(state.x, state.y,
                               math.atan2(ty - state.y, tx - state.x))
    control = ControlInput(0.0, 0.0)
    times = [0.0]
    states = [state]
    controls = [control]
    wp_index = 0
    best_goal_dist = math.inf
    last_progress_step = 0
    for i in range(max_steps):
        goal_dist = math.hypot(goal_xy[0] - state.x, goal_xy[1] - state.y)
        if goal_dist <= goal_tolerance:
            return NavigationResult(True, "goal reached", times, states,
                                    controls, waypoints)
        if goal_dist < best_goal_dist - 0.05:
            best_goal_dist = goal_dist
            last_progress_step = i
        elif i - last_progress_step > 150:
            replanned = plan_from(state.x, state.y)
            if replanned is not None:
                waypoints = replanned
                wp_index = 0
            last_progress_step = i
        # Advance the active waypoint to the last one within lookahead range.
        while (wp_index + 1 < len(waypoints)
               and math.hypot(waypoints[wp_index][0] - state.x,
                              waypoints[wp_index][1] - state.y) < lookahead):
            wp_index += 1
        target = waypoints[wp_index]
        result_step = dwa_step(state, control, grid, footprint, target, cfg)
        control = clamp_control(result_step.control, cfg.v_max)
        state = step(state, control, cfg.dt, cfg.wheelbase)
        times.append((i + 1) * cfg.dt)
        states.append(state)
        controls.append(control)
        if collide(grid, footprint, state):
            return NavigationResult(False, "collision during execution",
                                    times, states, controls, waypoints)
    return NavigationResult(False, "step limit exceeded", times, states,
                            controls, waypoints)
