"""Command-line entry point.

Subcommands:
    urdf gen|check   emit or validate a robot description
    sim              open-loop trajectory from a control schedule CSV
    navigate         global plan + DWA execution, CSV + SVG outputs
    train            tabular Q-learning on the alley task
    serve            run the TCP episode server

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .errors import AdrSimError
from .kinematics import ControlInput, KinematicState, clamp_control, step, trajectory_csv_rows
from .planners import DwaConfig, navigate
from .plot import render_learning_curve_svg, render_world_svg
from .rl_env import AlleyEnv, AlleyEnvConfig, evaluate_policy, q_learning_train, save_learning_curve, save_policy
from .robot_model import build_canonical_model, default_robot_spec_text, load_robot_spec, validate_model
from .urdf import emit_urdf, parse_urdf
from .world import Footprint, OccupancyGrid, UrbanConfig, build_urban

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected X,Y")
    return float(parts[0]), float(parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adrsim",
                                     description="2D delivery-robot simulator")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    urdf_p = sub.add_parser("urdf", help="robot description tools")
    urdf_sub = urdf_p.add_subparsers(dest="urdf_command", required=True)
    gen = urdf_sub.add_parser("gen", help="emit a robot description")
    gen.add_argument("--spec", type=Path, help="robot spec file "
                     "([dimensions]/[masses]); defaults are used when omitted")
    gen.add_argument("--out", dest="urdf_out", type=Path, default=Path("model.urdf"))
    check = urdf_sub.add_parser("check", help="validate a robot description")
    check.add_argument("urdf_file", type=Path)

    sim = sub.add_parser("sim", help="open-loop trajectory from a control schedule")
    sim.add_argument("--controls", type=Path, required=True,
                     help="CSV schedule t,v,phi (piecewise-constant hold)")
    sim.add_argument("--duration", type=float, default=None,
                     help="total time (default: last schedule time + 1s)")
    sim.add_argument("--dt", type=float, default=0.01)

    nav = sub.add_parser("navigate", help="plan and drive to a goal")
    nav.add_argument("--world", type=Path, help="world file (default: built-in urban)")
    nav.add_argument("--start", type=_parse_point, default=(1.5, 1.5))
    nav.add_argument("--goal", type=_parse_point, default=(14.5, 14.5))
    nav.add_argument("--planner", choices=("astar", "dijkstra"), default="astar")

    train = sub.add_parser("train", help="tabular Q-learning on the alley task")
    train.add_argument("--episodes", type=int, default=5000)
    train.add_argument("--alpha", type=float, default=0.1)
    train.add_argument("--gamma", type=float, default=0.95)
    train.add_argument("--alley-width", type=float, default=1.2)
    train.add_argument("--eval-episodes", type=int, default=100)

    serve_p = sub.add_parser("serve", help="run the TCP episode server")
    serve_p.add_argument("--bind", default="127.0.0.1:7601")
    serve_p.add_argument("--scenario", choices=("alley", "urban"), default="alley")
    serve_p.add_argument("--log-dir", type=Path, default=None)

    return parser


def _cmd_urdf(args) -> int:
    if args.urdf_command == "gen":
        if args.spec is not None:
            dims, masses = load_robot_spec(args.spec)
        else:
            dims, masses = load_robot_spec_defaults()
        model = build_canonical_model(dims, masses)
        violations = validate_model(model)
        if violations:
            print("model invalid:", file=sys.stderr)
            for v in violations:
                print(f"  {v}", file=sys.stderr)
            return EXIT_DOMAIN
        args.urdf_out.parent.mkdir(parents=True, exist_ok=True)
        args.urdf_out.write_text(emit_urdf(model), encoding="utf-8")
        print(f"wrote {args.urdf_out}")
        return EXIT_OK

    text = args.urdf_file.read_text(encoding="utf-8")
    warnings: list[str] = []
    model = parse_urdf(text, warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    violations = validate_model(model)
    if violations:
        print(f"{args.urdf_file}: INVALID")
        for v in violations:
            print(f"  {v}")
        return EXIT_DOMAIN
    print(f"{args.urdf_file}: OK "
          f"({len(model.links)} links, {len(model.joints)} joints)")
    return EXIT_OK


def load_robot_spec_defaults():
    import io

    from .robot_model import DEFAULT_MASSES, Dimensions

    return Dimensions(), dict(DEFAULT_MASSES)


def _read_schedule(path: Path) -> list[tuple[float, float, float]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "v", "phi"]:
            raise AdrSimError("control schedule must have header t,v,phi")
        for row in reader:
            if not row:
                continue
            rows.append((float(row[0]), float(row[1]), float(row[2])))
    if not rows:
        raise AdrSimError("control schedule is empty")
    return sorted(rows)


def _cmd_sim(args) -> int:
    schedule = _read_schedule(args.controls)
    duration = args.duration if args.duration is not None else schedule[-1][0] + 1.0
    dims, _ = load_robot_spec_defaults()
    state = KinematicState()
    times = [0.0]
    states = [state]
    controls = [clamp_control(ControlInput(schedule[0][1], schedule[0][2]))]
    n = int(round(duration / args.dt))
    idx = 0
    for i in range(n):
        t = i * args.dt
        while idx + 1 < len(schedule) and schedule[idx + 1][0] <= t:
            idx += 1
        u = clamp_control(ControlInput(schedule[idx][1], schedule[idx][2]))
        state = step(state, u, args.dt, dims.wheelbase)
        times.append((i + 1) * args.dt)
        states.append(state)
        controls.append(u)
    args.out.mkdir(parents=True, exist_ok=True)
    out_csv = args.out / "trajectory.csv"
    out_csv.write_text("\n".join(trajectory_csv_rows(times, states, controls)) + "\n",
                       encoding="utf-8")
    print(f"wrote {out_csv}")
    return EXIT_OK


def _cmd_navigate(args) -> int:
    if args.world is not None:
        grid = OccupancyGrid.load(args.world)
    else:
        grid = build_urban(UrbanConfig(seed=args.seed, start=args.start,
                                       goal=args.goal))
    dims, _ = load_robot_spec_defaults()
    footprint = Footprint.from_dimensions(dims)
    start_pose = KinematicState(args.start[0], args.start[1], 0.0)
    result = navigate(grid, footprint, start_pose, args.goal,
                      planner=args.planner, dwa=DwaConfig(wheelbase=dims.wheelbase))
    args.out.mkdir(parents=True, exist_ok=True)
    if result.states:
        out_csv = args.out / "trajectory.csv"
        rows = trajectory_csv_rows(result.times, result.states, result.controls)
        out_csv.write_text("\n".join(rows) + "\n", encoding="utf-8")
        print(f"wrote {out_csv}")
    out_svg = args.out / "navigation.svg"
    out_svg.write_text(render_world_svg(
        grid,
        path_xy=result.path_xy,
        trajectory_xy=[(s.x, s.y) for s in result.states],
        markers=[(args.start[0], args.start[1], "#2ca02c"),
                 (args.goal[0], args.goal[1], "#d62728")]), encoding="utf-8")
    print(f"wrote {out_svg}")
    if not result.reached:
        print(result.message, file=sys.stderr)
        return EXIT_DOMAIN
    print(f"goal reached in {len(result.states) - 1} steps")
    return EXIT_OK


def _cmd_train(args) -> int:
    env = AlleyEnv(AlleyEnvConfig(alley_width=args.alley_width))
    result = q_learning_train(episodes=args.episodes, alpha=args.alpha,
                              gamma=args.gamma, seed=args.seed, env=env)
    args.out.mkdir(parents=True, exist_ok=True)
    curve_csv = args.out / "learning_curve.csv"
    save_learning_curve(result.log, curve_csv)
    policy_path = args.out / "policy.txt"
    save_policy(result.q_table, policy_path)
    curve_svg = args.out / "learning_curve.svg"
    curve_svg.write_text(render_learning_curve_svg(result.log), encoding="utf-8")
    eval_env = AlleyEnv(AlleyEnvConfig(alley_width=args.alley_width))
    success, _ = evaluate_policy(result.q_table, episodes=args.eval_episodes,
                                 env=eval_env)
    print(f"wrote {curve_csv}")
    print(f"wrote {policy_path}")
    print(f"wrote {curve_svg}")
    print(f"greedy success rate: {success:.2f} over {args.eval_episodes} episodes")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .sim_server import serve

    print(f"serving on {args.bind} (scenario={args.scenario}, seed={args.seed})")
    serve(bind=args.bind, scenario=args.scenario, seed=args.seed,
          log_dir=args.log_dir)
    return EXIT_OK


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        if args.command == "urdf":
            return _cmd_urdf(args)
        if args.command == "sim":
            return _cmd_sim(args)
        if args.command == "navigate":
            return _cmd_navigate(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except AdrSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
