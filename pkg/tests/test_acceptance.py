"""End-to-end acceptance gate.

Each test exercises one release criterion at its stated tolerance and prints
a single PASS/FAIL line directly to the terminal (bypassing capture) so the
gate's outcome is visible in any log.
"""

import math
import sys

import numpy as np
import pytest

from adrsim import kernels
from adrsim.cli import EXIT_OK, run
from adrsim.kinematics import (
    ControlInput,
    KinematicState,
    clamp_control,
    derivative,
    joint_map,
    step,
)
from adrsim.planners import DwaConfig, astar, dijkstra, dwa_step, inflate, navigate
from adrsim.rl_env import AlleyEnv, evaluate_policy, q_learning_train
from adrsim.robot_model import (
    BoxParams,
    CylinderParams,
    Dimensions,
    box_inertia,
    build_canonical_model,
    cylinder_inertia,
)
from adrsim.urdf import emit_urdf, models_close, parse_urdf
from adrsim.world import Footprint, OccupancyGrid, UrbanConfig, build_urban
from oracles import bellman_ford_cost, mc_box_inertia, mc_cylinder_inertia, random_grid
from test_urdf import random_model

L = 0.530


def report(name: str, ok: bool):
    print(f"{name}: {'PASS' if ok else 'FAIL'}", file=sys.__stdout__, flush=True)
    assert ok, name


def test_inertia_matches_volume_integration_oracle():
    rng = np.random.default_rng(2024)
    ok = True
    for i in range(25):
        m = rng.uniform(0.1, 50.0)
        l, w, d = rng.uniform(0.05, 3.0, 3)
        t = box_inertia(BoxParams(m, l, w, d))
        mc = mc_box_inertia(m, l, w, d, samples=10_000_000, seed=i)
        ok &= all(math.isclose(a, b, rel_tol=1e-3) for a, b in
                  zip((t.ixx, t.iyy, t.izz), mc))
    for i in range(25):
        m = rng.uniform(0.1, 50.0)
        r = rng.uniform(0.05, 2.0)
        h = rng.uniform(0.01, 3.0)
        t = cylinder_inertia(CylinderParams(m, r, h))
        mc = mc_cylinder_inertia(m, r, h, samples=10_000_000, seed=1000 + i)
        ok &= all(math.isclose(a, b, rel_tol=1e-3) for a, b in
                  zip((t.ixx, t.iyy, t.izz), mc))

    # Hand-evaluated closed forms for the reference geometry.
    shell = box_inertia(BoxParams(40.0, 0.963, 0.672, 0.557))
    ok &= shell.ixx == 40.0 / 12.0 * (0.672 ** 2 + 0.557 ** 2)
    ok &= shell.iyy == 40.0 / 12.0 * (0.963 ** 2 + 0.557 ** 2)
    ok &= shell.izz == 40.0 / 12.0 * (0.963 ** 2 + 0.672 ** 2)
    wheel = cylinder_inertia(CylinderParams(3.0, 0.150, 0.05))
    ok &= wheel.ixx == 3.0 / 12.0 * (3.0 * 0.150 * 0.150 + 0.05 * 0.05)
    ok &= wheel.izz == 3.0 * 0.150 * 0.150 / 2.0
    report("inertia vs volume-integration oracle", ok)


def test_lateral_velocity_vanishes_on_random_trajectories():
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(1000):
        s = KinematicState(rng.uniform(-10, 10), rng.uniform(-10, 10),
                           rng.uniform(-math.pi, math.pi))
        v = rng.uniform(-2.0, 2.0)
        phi = rng.uniform(-math.pi / 3, math.pi / 3)
        u = ControlInput(v, phi)
        for _ in range(500):
            dx, dy, _ = derivative(s, u, L)
            if abs(-math.sin(s.theta) * dx + math.cos(s.theta) * dy) >= 1e-12:
                ok = False
                break
            s = step(s, u, 0.01, L)
        if not ok:
            break
    report("no-slip lateral velocity < 1e-12", ok)


def test_circle_closure_and_integration_order():
    v, phi = 1.0, math.pi / 6
    omega = v / L * math.tan(phi)
    period = 2.0 * math.pi / omega

    def drive(duration, dt):
        s = KinematicState()
        n = int(duration // dt)
        for _ in range(n):
            s = step(s, ControlInput(v, phi), dt, L)
        rem = duration - n * dt
        if rem > 1e-12:
            s = step(s, ControlInput(v, phi), rem, L)
        return s

    s = drive(period, 1e-3)
    closure = math.hypot(s.x, s.y)

    # Order check against the analytic arc at a quarter period, where the
    # local truncation error has not telescoped away.
    radius = v / omega
    quarter = (math.pi / 2.0) / omega

    def arc_error(dt):
        n = int(round(quarter / dt))
        s = KinematicState()
        for _ in range(n):
            s = step(s, ControlInput(v, phi), dt, L)
        t = n * dt
        return math.hypot(s.x - radius * math.sin(omega * t),
                          s.y - radius * (1.0 - math.cos(omega * t)))

    ratio = arc_error(0.08) / arc_error(0.04)
    report("circle closure < 1e-4 and halving dt shrinks error >= 8x",
           closure < 1e-4 and ratio >= 8.0)


def test_joint_mapping_and_steering_clamp():
    js = joint_map(ControlInput(1.5, 0.3), 0.150)
    ok = (js.base2lstr == 0.3 and js.base2rstr == 0.3
          and js.fl_axle == 10.0 and js.fr_axle == 10.0
          and js.rl_axle == 10.0 and js.rr_axle == 10.0)
    for phi in np.linspace(-10.0, 10.0, 101):
        clamped = clamp_control(ControlInput(1.0, float(phi)))
        ok &= abs(clamped.phi) <= math.pi / 3
        if abs(phi) <= math.pi / 3:
            ok &= clamped.phi == phi
    report("joint mapping exact and steering clamped to +/-pi/3", ok)


def test_urdf_round_trip_and_canonical_document():
    rng = np.random.default_rng(99)
    ok = True
    for _ in range(200):
        model = random_model(rng)
        ok &= models_close(model, parse_urdf(emit_urdf(model)), tol=1e-6)

    text = emit_urdf(build_canonical_model(Dimensions()))
    model = parse_urdf(text)
    revolute = [j for j in model.joints if j.kind == "revolute"]
    ok &= len(model.links) == 7
    ok &= len(model.joints) == 6
    ok &= len(revolute) == 2
    ok &= all(j.limit == (-1.047198, 1.047198) for j in revolute)
    report("robot description round-trip within 1e-6", ok)


def test_planner_costs_match_oracle():
    rng = np.random.default_rng(314)
    ok = True
    for _ in range(100):
        grid = random_grid(rng, 30, 30, density=0.3)
        frees = np.argwhere(grid.cells == 0)
        a, b = frees[rng.choice(len(frees), size=2, replace=False)]
        start, goal = (int(a[1]), int(a[0])), (int(b[1]), int(b[0]))
        d = dijkstra(grid, start, goal)
        s = astar(grid, start, goal)
        oracle = bellman_ford_cost(grid, start, goal)
        if d.reachable:
            ok &= s.reachable
            ok &= math.isclose(d.cost, s.cost, abs_tol=1e-9)
            ok &= math.isclose(d.cost, oracle, abs_tol=1e-9)
            ok &= s.expanded <= d.expanded
        else:
            ok &= not s.reachable and math.isinf(oracle)
    report("planner costs equal Bellman-Ford oracle; A* expands no more", ok)


def test_local_planner_never_picks_colliding_control():
    rng = np.random.default_rng(777)
    fp = Footprint(0.963, 0.672, 0.265)
    cfg = DwaConfig()
    n_steps = max(1, int(round(cfg.horizon / cfg.dt)))
    angles = np.linspace(-cfg.clearance_fov / 2, cfg.clearance_fov / 2,
                         cfg.clearance_beams)
    ok = True
    checked = 0
    while checked < 200:
        grid = random_grid(rng, 60, 60, resolution=0.1,
                           density=rng.uniform(0.01, 0.12))
        state = KinematicState(rng.uniform(0.5, 5.5), rng.uniform(0.5, 5.5),
                               rng.uniform(-math.pi, math.pi))
        if kernels.footprint_collides(grid.cells, grid.resolution, 0.0, 0.0,
                                      state.x, state.y, state.theta,
                                      fp.length / 2, fp.width / 2,
                                      fp.center_offset):
            continue
        current = ControlInput(rng.uniform(0.0, 2.0),
                               rng.uniform(-math.pi / 3, math.pi / 3))
        goal = (rng.uniform(0.5, 5.5), rng.uniform(0.5, 5.5))
        result = dwa_step(state, current, grid, fp, goal, cfg)
        if result.emergency_stop:
            ok &= result.control == ControlInput(0.0, 0.0)
        else:
            collided, *_ = kernels.evaluate_rollout(
                grid.cells, grid.resolution, 0.0, 0.0,
                state.x, state.y, state.theta,
                result.control.v, result.control.phi, cfg.wheelbase,
                cfg.dt, n_steps, fp.length / 2, fp.width / 2,
                fp.center_offset, angles, cfg.clearance_range)
            ok &= not collided
        checked += 1

    # A fully boxed-in pose must produce the emergency stop.
    grid = OccupancyGrid.empty(60, 60, 0.1)
    grid.occupy_rect(2.2, 2.2, 3.8, 2.4)
    grid.occupy_rect(2.2, 3.6, 3.8, 3.8)
    grid.occupy_rect(2.2, 2.2, 2.4, 3.8)
    grid.occupy_rect(3.6, 2.2, 3.8, 3.8)
    boxed = dwa_step(KinematicState(3.0, 3.0, 0.0), ControlInput(1.0, 0.0),
                     grid, Footprint(1.1, 1.1), (5.0, 3.0), DwaConfig())
    ok &= boxed.emergency_stop
    report("local planner rollouts are collision-free; stop when boxed in", ok)


def test_navigation_reaches_seeded_goals():
    from scipy.ndimage import label

    dims = Dimensions()
    fp = Footprint.from_dimensions(dims)
    rng = np.random.default_rng(42)
    ok = True
    for _ in range(10):
        seed = int(rng.integers(0, 10000))
        grid = build_urban(UrbanConfig(seed=seed))
        inflated = inflate(grid, fp)
        # Sample start/goal from the same flood-fill component so every pair
        # is reachable by construction.
        labels, _ = label(inflated.cells == 0)
        largest = np.argmax(np.bincount(labels.ravel())[1:]) + 1
        frees = np.argwhere(labels == largest)
        sub = np.random.default_rng(seed)
        while True:
            a, b = frees[sub.integers(len(frees), size=2)]
            sx, sy = inflated.cell_center(int(a[1]), int(a[0]))
            gx, gy = inflated.cell_center(int(b[1]), int(b[0]))
            if (gx - sx) ** 2 + (gy - sy) ** 2 > 25.0:
                break
        result = navigate(grid, fp, KinematicState(sx, sy, 0.0), (gx, gy),
                          dwa=DwaConfig(wheelbase=dims.wheelbase))
        final = result.states[-1] if result.states else None
        ok &= result.reached
        ok &= final is not None and math.hypot(final.x - gx, final.y - gy) <= 0.2
    report("navigation reaches 10 seeded goals within 0.2 m", ok)


def test_q_learning_converges_across_seeds():
    # Threshold pinned from training runs: every seed tried reached a 1.00
    # greedy success rate within 1000 episodes; the gate requires >= 0.9 on
    # at least 8 of 10 seeds.
    passes = 0
    for seed in range(10):
        result = q_learning_train(episodes=1000, seed=seed, env=AlleyEnv())
        rate, _ = evaluate_policy(result.q_table, episodes=100, env=AlleyEnv())
        passes += rate >= 0.9
    report("greedy success >= 0.9 on >= 8/10 training seeds", passes >= 8)


def test_seeded_cli_runs_are_byte_identical(tmp_path):
    world = OccupancyGrid.empty(120, 120, 0.1)
    world_path = tmp_path / "world.txt"
    world.save(world_path)
    controls = tmp_path / "controls.csv"
    controls.write_text("t,v,phi\n0,1.0,0.2\n")

    def invocations(out):
        return [
            (["urdf", "gen", "--out", str(out / "model.urdf")],
             ["model.urdf"]),
            (["--seed", "0", "--out", str(out), "sim",
              "--controls", str(controls), "--duration", "2.0"],
             ["trajectory.csv"]),
            (["--seed", "0", "--out", str(out), "navigate",
              "--world", str(world_path), "--start", "2.0,2.0",
              "--goal", "9.0,9.0"],
             ["trajectory.csv", "navigation.svg"]),
            (["--seed", "5", "--out", str(out), "train",
              "--episodes", "25", "--eval-episodes", "2"],
             ["learning_curve.csv", "policy.txt", "learning_curve.svg"]),
        ]

    ok = True
    for i in range(len(invocations(tmp_path))):
        digests = []
        for attempt in ("a", "b"):
            out = tmp_path / f"run{i}{attempt}"
            out.mkdir()
            argv, artifacts = invocations(out)[i]
            ok &= run(argv) == EXIT_OK
            digests.append(b"".join((out / name).read_bytes()
                                    for name in artifacts))
        ok &= digests[0] == digests[1]
    report("seeded command-line runs are byte-identical", ok)
