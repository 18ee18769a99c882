#!/usr/bin/env python3
"""Benchmark the hot kernels with and without JIT compilation.

Run directly; the script re-invokes itself with ADRSIM_NO_NUMBA=1 to time
the plain-interpreter fallback path and prints both columns side by side.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import math
import os
import subprocess
import sys
import time

import numpy as np


def build_workload():
    from adrsim.kinematics import KinematicState
    from adrsim.world import UrbanConfig, build_urban

    grid = build_urban(UrbanConfig(seed=0))
    pose = KinematicState(1.5, 1.5, 0.3)
    return grid, pose


def bench_raycast(grid, pose, repeat):
    from adrsim.world import ScanConfig, raycast_scan

    cfg = ScanConfig(num_beams=360, max_range=10.0)
    raycast_scan(grid, pose, cfg)  # warmup / compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        raycast_scan(grid, pose, cfg)
    return (time.perf_counter() - t0) / repeat


def bench_collision(grid, pose, repeat):
    from adrsim.kinematics import KinematicState
    from adrsim.robot_model import Dimensions
    from adrsim.world import Footprint, collide

    fp = Footprint.from_dimensions(Dimensions())
    rng = np.random.default_rng(1)
    poses = [KinematicState(rng.uniform(1, 15), rng.uniform(1, 15),
                            rng.uniform(-math.pi, math.pi)) for _ in range(100)]
    collide(grid, fp, poses[0])  # warmup / compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        for p in poses:
            collide(grid, fp, p)
    return (time.perf_counter() - t0) / (repeat * len(poses))


def bench_dwa(grid, pose, repeat):
    from adrsim.kinematics import ControlInput
    from adrsim.planners import DwaConfig, dwa_step
    from adrsim.robot_model import Dimensions
    from adrsim.world import Footprint

    fp = Footprint.from_dimensions(Dimensions())
    cfg = DwaConfig()
    dwa_step(pose, ControlInput(0.5, 0.0), grid, fp, (14.5, 14.5), cfg)  # warmup
    t0 = time.perf_counter()
    for _ in range(repeat):
        dwa_step(pose, ControlInput(0.5, 0.0), grid, fp, (14.5, 14.5), cfg)
    return (time.perf_counter() - t0) / repeat


def run_benchmarks(repeat):
    grid, pose = build_workload()
    return {
        "lidar scan (360 beams)": bench_raycast(grid, pose, repeat),
        "footprint collision check": bench_collision(grid, pose, repeat),
        "local planner step (231 rollouts)": bench_dwa(grid, pose, max(1, repeat // 10)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=50)
    parser.add_argument("--emit-json", action="store_true",
                        help="print raw timings as JSON (used internally)")
    args = parser.parse_args()

    from adrsim.accel import USE_NUMBA

    results = run_benchmarks(args.repeat)
    if args.emit_json:
        print(json.dumps(results))
        return

    if not USE_NUMBA:
        print("note: JIT unavailable or disabled; timing fallback only")
        for name, t in results.items():
            print(f"{name:<36} {t * 1e3:9.3f} ms")
        return

    env = dict(os.environ, ADRSIM_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__),
         "--repeat", str(max(1, args.repeat // 10)), "--emit-json"],
        env=env, capture_output=True, text=True, check=True)
    fallback = json.loads(out.stdout)

    print(f"{'kernel':<36} {'jit':>10} {'fallback':>12} {'speedup':>9}")
    for name, t in results.items():
        fb = fallback[name]
        print(f"{name:<36} {t * 1e3:8.3f}ms {fb * 1e3:10.3f}ms "
              f"{fb / t:8.1f}x")


if __name__ == "__main__":
    main()
