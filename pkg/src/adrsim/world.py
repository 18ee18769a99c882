"""Occupancy-grid worlds, collision checking, and planar lidar simulation.

Two scenario builders mirror the test environments: an urban block layout
(buildings, roads, scattered obstacles) and a narrow alley formed by two
parallel walls. Grids are closed: boundary cells are always occupied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError, InvalidParameterError
from .kinematics import KinematicState
from .robot_model import Dimensions

DEFAULT_RESOLUTION = 0.05  # m / cell


@dataclass
class OccupancyGrid:
    width: int
    height: int
    resolution: float
    origin_x: float
    origin_y: float
    cells: np.ndarray  # uint8 (height, width), nonzero = occupied

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError("grid must be at least 1x1")
        if self.resolution <= 0:
            raise InvalidParameterError("resolution must be positive")
        self.cells = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise InvalidParameterError("cells shape does not match width/height")

    @classmethod
    def empty(cls, width: int, height: int, resolution: float,
              origin_x: float = 0.0, origin_y: float = 0.0) -> "OccupancyGrid":
        """Free interior with an occupied one-cell boundary."""
        cells = np.zeros((height, width), dtype=np.uint8)
        cells[0, :] = 1
        cells[-1, :] = 1
        cells[:, 0] = 1
        cells[:, -1] = 1
        return cls(width, height, resolution, origin_x, origin_y, cells)

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((x - self.origin_x) / self.resolution)),
                int(math.floor((y - self.origin_y) / self.resolution)))

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin_x + (ix + 0.5) * self.resolution,
                self.origin_y + (iy + 0.5) * self.resolution)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_occupied(self, ix: int, iy: int) -> bool:
        if not self.in_bounds(ix, iy):
            return True
        return bool(self.cells[iy, ix])

    def occupy_rect(self, x0: float, y0: float, x1: float, y1: float):
        ix0, iy0 = self.world_to_cell(x0, y0)
        ix1, iy1 = self.world_to_cell(x1, y1)
        ix0, ix1 = max(0, min(ix0, ix1)), min(self.width - 1, max(ix0, ix1))
        iy0, iy1 = max(0, min(iy0, iy1)), min(self.height - 1, max(iy0, iy1))
        self.cells[iy0:iy1 + 1, ix0:ix1 + 1] = 1

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.width, self.height, self.resolution,
                             self.origin_x, self.origin_y, self.cells.copy())

    def to_text(self) -> str:
        header = (f"{self.width} {self.height} {self.resolution!r} "
                  f"{self.origin_x!r} {self.origin_y!r}")
        rows = ["".join("#" if c else "." for c in row) for row in self.cells]
        return "\n".join([header] + rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OccupancyGrid":
        lines = text.splitlines()
        if not lines:
            raise InvalidParameterError("empty world file")
        parts = lines[0].split()
        if len(parts) != 5:
            raise InvalidParameterError("world header must be "
                                        "'width height resolution origin_x origin_y'")
        width, height = int(parts[0]), int(parts[1])
        resolution, ox, oy = float(parts[2]), float(parts[3]), float(parts[4])
        rows = lines[1:1 + height]
        if len(rows) != height or any(len(r) != width for r in rows):
            raise InvalidParameterError("world body does not match header size")
        cells = np.array([[1 if ch == "#" else 0 for ch in row] for row in rows],
                         dtype=np.uint8)
        return cls(width, height, resolution, ox, oy, cells)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "OccupancyGrid":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class Footprint:
    """Axis-aligned rectangle in the body frame.

    (x, y) poses refer to the rear-axle midpoint; the rectangle center sits
    center_offset ahead of it.
    """

    length: float
    width: float
    center_offset: float = 0.0

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise InvalidParameterError("footprint extents must be positive")

    @classmethod
    def from_dimensions(cls, dims: Dimensions) -> "Footprint":
        return cls(dims.shell_length, dims.shell_width,
                   center_offset=dims.wheelbase / 2.0)

    @property
    def circumradius(self) -> float:
        return 0.5 * math.hypot(self.length, self.width)


@dataclass(frozen=True)
class ScanConfig:
    num_beams: int = 360
    fov: float = 2.0 * math.pi
    max_range: float = 10.0
    # Sensor pose in the body frame: (x, y, yaw).
    mount_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.num_beams < 1:
            raise InvalidParameterError("num_beams must be >= 1")
        if not (0.0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise InvalidParameterError("fov must be in (0, 2*pi]")
        if self.max_range <= 0:
            raise InvalidParameterError("max_range must be positive")

    def beam_angles(self) -> np.ndarray:
        """Beam i points at fov * i/(n-1) - fov/2 relative to heading."""
        n = self.num_beams
        if n == 1:
            return np.zeros(1)
        return self.fov * np.arange(n) / (n - 1) - self.fov / 2.0


@dataclass(frozen=True)
class LidarScan:
    ranges: np.ndarray
    config: ScanConfig


@dataclass(frozen=True)
class UrbanConfig:
    width_m: float = 16.0
    height_m: float = 16.0
    resolution: float = DEFAULT_RESOLUTION
    road_width_m: float = 3.0
    blocks_x: int = 2
    blocks_y: int = 2
    n_obstacles: int = 12
    obstacle_size_m: float = 0.2
    robot_width_m: float = 0.672
    seed: int = 0
    start: tuple[float, float] = (1.5, 1.5)
    goal: tuple[float, float] = (14.5, 14.5)


def build_urban(config: UrbanConfig | None = None) -> OccupancyGrid:
    """Deterministic urban block world: buildings separated by roads, plus
    seeded point obstacles on the roads."""
    cfg = config or UrbanConfig()
    nx = int(round(cfg.width_m / cfg.resolution))
    ny = int(round(cfg.height_m / cfg.resolution))
    if nx < 40 or ny < 40:
        raise ConfigurationError("urban grid must be at least 40x40 cells")
    if cfg.road_width_m < 4.0 * cfg.robot_width_m:
        raise ConfigurationError("roads must be at least 4x the robot width")

    grid = OccupancyGrid.empty(nx, ny, cfg.resolution)
    road = cfg.road_width_m
    block_w = (cfg.width_m - road * (cfg.blocks_x + 1)) / cfg.blocks_x
    block_h = (cfg.height_m - road * (cfg.blocks_y + 1)) / cfg.blocks_y
    if block_w <= 0 or block_h <= 0:
        raise ConfigurationError("world too small for the requested blocks and roads")

    for bx in range(cfg.blocks_x):
        for by in range(cfg.blocks_y):
            x0 = road + bx * (block_w + road)
            y0 = road + by * (block_h + road)
            grid.occupy_rect(x0, y0, x0 + block_w, y0 + block_h)

    rng = np.random.default_rng(cfg.seed)
    clearance = 2.0 * cfg.robot_width_m
    placed = 0
    attempts = 0
    half = cfg.obstacle_size_m / 2.0
    while placed < cfg.n_obstacles and attempts < cfg.n_obstacles * 50:
        attempts += 1
        x = rng.uniform(0.5, cfg.width_m - 0.5)
        y = rng.uniform(0.5, cfg.height_m - 0.5)
        ix, iy = grid.world_to_cell(x, y)
        if grid.cells[iy, ix]:
            continue
        if math.hypot(x - cfg.start[0], y - cfg.start[1]) < clearance:
            continue
        if math.hypot(x - cfg.goal[0], y - cfg.goal[1]) < clearance:
            continue
        grid.occupy_rect(x - half, y - half, x + half, y + half)
        placed += 1

    for label, (px, py) in (("start", cfg.start), ("goal", cfg.goal)):
        ix, iy = grid.world_to_cell(px, py)
        if not grid.in_bounds(ix, iy) or grid.cells[iy, ix]:
            raise ConfigurationError(f"{label} pose is not on free space")
    if not connected(grid, cfg.start, cfg.goal):
        raise ConfigurationError("start and goal ended up disconnected")
    return grid


def build_alley(width_m: float, length_m: float,
                resolution: float = DEFAULT_RESOLUTION,
                robot_width_m: float = 0.672,
                margin_m: float = 1.2,
                wall_thickness_m: float = 0.2) -> OccupancyGrid:
    """Corridor of clear width `width_m` along +x, centered on y = 0.

    The grid spans x in [-margin, length + margin]; the robot enters at x = 0.
    """
    if resolution <= 0:
        raise InvalidParameterError("resolution must be positive")
    if width_m <= robot_width_m:
        raise ConfigurationError("alley width must exceed the robot width")

    # Build from cell counts so the corridor width is exact despite float
    # division (e.g. 1.25 / 0.05 rounding below 25).
    n_half_w = int(round(width_m / 2.0 / resolution))
    n_wall = max(1, int(round(wall_thickness_m / resolution)))
    n_half = n_half_w + n_wall + 1  # +1 for the boundary ring
    nx = int(round((length_m + 2.0 * margin_m) / resolution))
    ny = 2 * n_half
    grid = OccupancyGrid.empty(nx, ny, resolution,
                               origin_x=-margin_m, origin_y=-n_half * resolution)
    grid.cells[n_half + n_half_w:, :] = 1
    grid.cells[:n_half - n_half_w, :] = 1
    return grid


def collide(grid: OccupancyGrid, footprint: Footprint,
            pose: KinematicState) -> bool:
    """True if any occupied cell center lies inside the rotated footprint,
    or the pose reference point is outside the grid."""
    return bool(kernels.footprint_collides(
        grid.cells, grid.resolution, grid.origin_x, grid.origin_y,
        pose.x, pose.y, pose.theta,
        footprint.length / 2.0, footprint.width / 2.0, footprint.center_offset))


def raycast_scan(grid: OccupancyGrid, pose: KinematicState,
                 cfg: ScanConfig) -> LidarScan:
    """Planar scan from the (body-frame mounted) sensor at the given pose."""
    mx, my, myaw = cfg.mount_offset
    cos_t, sin_t = math.cos(pose.theta), math.sin(pose.theta)
    sx = pose.x + cos_t * mx - sin_t * my
    sy = pose.y + sin_t * mx + cos_t * my
    angles = cfg.beam_angles() + pose.theta + myaw
    out = np.empty(cfg.num_beams)
    kernels.cast_rays(grid.cells, grid.resolution, grid.origin_x, grid.origin_y,
                      sx, sy, angles, cfg.max_range, out)
    return LidarScan(ranges=out, config=cfg)


def downsample(scan: LidarScan, k: int) -> np.ndarray:
    """Min-pool the scan into k contiguous angular sectors."""
    n = scan.ranges.shape[0]
    if k < 1 or k > n:
        raise InvalidParameterError("sector count must be in [1, num_beams]")
    edges = np.linspace(0, n, k + 1).astype(int)
    return np.array([scan.ranges[edges[i]:edges[i + 1]].min() for i in range(k)])


def connected(grid: OccupancyGrid, a: tuple[float, float],
              b: tuple[float, float]) -> bool:
    """Flood-fill (4-connected) reachability between two world points."""
    from scipy.ndimage import label

    free = grid.cells == 0
    labels, _ = label(free)
    ax, ay = grid.world_to_cell(*a)
    bx, by = grid.world_to_cell(*b)
    if not (grid.in_bounds(ax, ay) and grid.in_bounds(bx, by)):
        return False
    la, lb = labels[ay, ax], labels[by, bx]
    return la != 0 and la == lb
