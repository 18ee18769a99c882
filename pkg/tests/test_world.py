import math

import numpy as np
import pytest

from adrsim.errors import ConfigurationError, InvalidParameterError
from adrsim.kinematics import KinematicState
from adrsim.robot_model import Dimensions
from adrsim.world import (
    Footprint,
    OccupancyGrid,
    ScanConfig,
    UrbanConfig,
    build_alley,
    build_urban,
    collide,
    connected,
    downsample,
    raycast_scan,
)
from oracles import marching_ray_check, random_grid, shapely_footprint_collides


def test_empty_grid_has_closed_boundary():
    grid = OccupancyGrid.empty(10, 8, 0.1)
    assert grid.cells[0, :].all() and grid.cells[-1, :].all()
    assert grid.cells[:, 0].all() and grid.cells[:, -1].all()
    assert not grid.cells[1:-1, 1:-1].any()


def test_world_cell_round_trip():
    grid = OccupancyGrid.empty(20, 20, 0.05, origin_x=-1.0, origin_y=2.0)
    for ix, iy in [(0, 0), (7, 3), (19, 19)]:
        cx, cy = grid.cell_center(ix, iy)
        assert grid.world_to_cell(cx, cy) == (ix, iy)


def test_occupy_rect_clips_to_grid():
    grid = OccupancyGrid.empty(10, 10, 0.1)
    grid.occupy_rect(-5.0, -5.0, 0.25, 0.25)
    assert grid.cells[1, 1] and grid.cells[2, 2]
    assert not grid.cells[3, 3]


def test_grid_text_round_trip():
    grid = OccupancyGrid.empty(12, 9, 0.05, origin_x=-0.3, origin_y=0.7)
    grid.occupy_rect(0.0, 0.9, 0.1, 1.0)
    clone = OccupancyGrid.from_text(grid.to_text())
    assert clone.width == grid.width and clone.height == grid.height
    assert clone.resolution == grid.resolution
    assert clone.origin_x == grid.origin_x and clone.origin_y == grid.origin_y
    assert np.array_equal(clone.cells, grid.cells)


def test_grid_file_round_trip(tmp_path):
    grid = OccupancyGrid.empty(6, 6, 0.25)
    path = tmp_path / "world.txt"
    grid.save(path)
    assert np.array_equal(OccupancyGrid.load(path).cells, grid.cells)


def test_grid_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        OccupancyGrid(0, 5, 0.1, 0, 0, np.zeros((5, 0), dtype=np.uint8))
    with pytest.raises(InvalidParameterError):
        OccupancyGrid(5, 5, -1.0, 0, 0, np.zeros((5, 5), dtype=np.uint8))
    with pytest.raises(InvalidParameterError):
        OccupancyGrid.from_text("bogus header\n")


def test_footprint_from_dimensions():
    fp = Footprint.from_dimensions(Dimensions())
    assert fp.length == 0.963
    assert fp.width == 0.672
    assert fp.center_offset == pytest.approx(0.265)
    assert fp.circumradius == pytest.approx(0.5 * math.hypot(0.963, 0.672))


def test_collision_matches_polygon_oracle():
    rng = np.random.default_rng(11)
    fp = Footprint(0.9, 0.6, center_offset=0.25)
    for trial in range(8):
        grid = random_grid(rng, 25, 25, resolution=0.1, density=0.15)
        for _ in range(25):
            pose = KinematicState(rng.uniform(0.0, 2.5), rng.uniform(0.0, 2.5),
                                  rng.uniform(-math.pi, math.pi))
            assert collide(grid, fp, pose) == shapely_footprint_collides(
                grid, fp, pose), f"trial {trial} pose {pose}"


def test_collision_outside_grid():
    grid = OccupancyGrid.empty(10, 10, 0.1)
    fp = Footprint(0.2, 0.2)
    assert collide(grid, fp, KinematicState(-5.0, 0.5, 0.0))


def test_collision_rotation_dependence():
    # A long footprint beside a wall: hits when turned toward it, not when
    # parallel to it.
    grid = OccupancyGrid.empty(40, 40, 0.1)
    grid.occupy_rect(0.0, 2.4, 4.0, 2.6)
    fp = Footprint(1.6, 0.3)
    pose_parallel = KinematicState(2.0, 2.0, 0.0)
    pose_turned = KinematicState(2.0, 2.0, math.pi / 2)
    assert not collide(grid, fp, pose_parallel)
    assert collide(grid, fp, pose_turned)


def test_raycast_against_marching_oracle():
    rng = np.random.default_rng(5)
    from adrsim import kernels

    for _ in range(40):
        grid = random_grid(rng, 30, 30, resolution=0.1, density=0.2)
        sx, sy = rng.uniform(0.3, 2.7), rng.uniform(0.3, 2.7)
        ix, iy = grid.world_to_cell(sx, sy)
        if grid.cells[iy, ix]:
            continue
        angle = rng.uniform(-math.pi, math.pi)
        r = kernels.cast_ray(grid.cells, grid.resolution, grid.origin_x,
                             grid.origin_y, sx, sy, angle, 5.0)
        err = marching_ray_check(grid, sx, sy, angle, 5.0, r)
        assert err is None, err


def test_raycast_known_corridor_width():
    # 1.0 m wide corridor, sensor on the centerline: side beams read 0.50 m.
    grid = build_alley(1.0, 4.0, resolution=0.05)
    scan = raycast_scan(grid, KinematicState(1.0, 0.0, 0.0),
                        ScanConfig(num_beams=5, max_range=10.0))
    # Beams at -pi, -pi/2, 0, +pi/2, +pi relative to heading.
    assert scan.ranges[1] == pytest.approx(0.5, abs=1e-9)
    assert scan.ranges[3] == pytest.approx(0.5, abs=1e-9)
    assert scan.ranges[2] > 3.0


def test_raycast_axis_aligned_exact():
    grid = OccupancyGrid.empty(20, 20, 0.1)
    grid.occupy_rect(1.5, 0.0, 1.6, 2.0)
    scan = raycast_scan(grid, KinematicState(0.5, 1.0, 0.0),
                        ScanConfig(num_beams=1, fov=1e-9, max_range=5.0))
    assert scan.ranges[0] == pytest.approx(1.0, abs=1e-9)


def test_raycast_mount_offset():
    grid = OccupancyGrid.empty(20, 20, 0.1)
    grid.occupy_rect(1.5, 0.0, 1.6, 2.0)
    cfg = ScanConfig(num_beams=1, fov=1e-9, max_range=5.0,
                     mount_offset=(0.2, 0.0, 0.0))
    scan = raycast_scan(grid, KinematicState(0.5, 1.0, 0.0), cfg)
    assert scan.ranges[0] == pytest.approx(0.8, abs=1e-9)


def test_raycast_max_range_saturation():
    grid = OccupancyGrid.empty(100, 100, 0.1)
    scan = raycast_scan(grid, KinematicState(5.0, 5.0, 0.0),
                        ScanConfig(num_beams=4, max_range=2.0))
    assert np.all(scan.ranges <= 2.0)
    assert scan.ranges[1:].max() == pytest.approx(2.0)


def test_downsample_matches_brute_force():
    rng = np.random.default_rng(9)
    from adrsim.world import LidarScan

    cfg = ScanConfig(num_beams=360)
    ranges = rng.uniform(0.1, 10.0, 360)
    scan = LidarScan(ranges=ranges, config=cfg)
    for k in (1, 7, 8, 360):
        sectors = downsample(scan, k)
        edges = np.linspace(0, 360, k + 1).astype(int)
        expected = [ranges[edges[i]:edges[i + 1]].min() for i in range(k)]
        assert np.allclose(sectors, expected)
    with pytest.raises(InvalidParameterError):
        downsample(scan, 0)
    with pytest.raises(InvalidParameterError):
        downsample(scan, 361)


def test_downsample_monotone_in_k():
    # The global minimum is preserved by any sector count.
    from adrsim.world import LidarScan

    rng = np.random.default_rng(2)
    ranges = rng.uniform(0.1, 10.0, 72)
    scan = LidarScan(ranges=ranges, config=ScanConfig(num_beams=72))
    for k in (2, 4, 8, 9):
        assert downsample(scan, k).min() == pytest.approx(ranges.min())


def test_build_urban_deterministic():
    a = build_urban(UrbanConfig(seed=4))
    b = build_urban(UrbanConfig(seed=4))
    c = build_urban(UrbanConfig(seed=5))
    assert np.array_equal(a.cells, b.cells)
    assert not np.array_equal(a.cells, c.cells)


def test_build_urban_start_goal_connected():
    cfg = UrbanConfig(seed=1)
    grid = build_urban(cfg)
    assert not grid.is_occupied(*grid.world_to_cell(*cfg.start))
    assert not grid.is_occupied(*grid.world_to_cell(*cfg.goal))
    assert connected(grid, cfg.start, cfg.goal)


def test_build_urban_validates_config():
    with pytest.raises(ConfigurationError):
        build_urban(UrbanConfig(road_width_m=1.0))
    with pytest.raises(ConfigurationError):
        build_urban(UrbanConfig(width_m=1.0, height_m=1.0))


def test_build_alley_geometry():
    grid = build_alley(1.2, 8.0, resolution=0.05)
    fp = Footprint.from_dimensions(Dimensions())
    assert not collide(grid, fp, KinematicState(0.0, 0.0, 0.0))
    assert not collide(grid, fp, KinematicState(7.5, 0.0, 0.0))
    # Walls begin half a width off the centerline.
    ix, iy = grid.world_to_cell(4.0, 0.62)
    assert grid.cells[iy, ix]
    ix, iy = grid.world_to_cell(4.0, 0.55)
    assert not grid.cells[iy, ix]


def test_build_alley_rejects_impassable_width():
    with pytest.raises(ConfigurationError):
        build_alley(0.5, 8.0, robot_width_m=0.672)


def test_connected_detects_walls():
    grid = OccupancyGrid.empty(40, 40, 0.1)
    assert connected(grid, (0.5, 0.5), (3.5, 3.5))
    grid.occupy_rect(2.0, 0.0, 2.1, 4.0)
    assert not connected(grid, (0.5, 0.5), (3.5, 3.5))
