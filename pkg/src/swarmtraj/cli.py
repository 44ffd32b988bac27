"""Command-line front end.

Exit codes: 0 success, 1 run failure (collision, timeout or deadlock),
2 usage or input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .errors import SwarmTrajError
from .primitive import PrimitiveOptions, average_cost, solve_min_time
from .sim import io
from .sim.metrics import aggregate, metrics, timing_stats
from .sim.runner import MODES, RunConfig, run
from .sim.scenario import MODELS, generate_scenario, preset
from .sim.world import PlantParams

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("swarmtraj")


class UsageError(Exception):
    pass


def _vector(text, n=None):
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(v) != n:
        raise argparse.ArgumentTypeError(f"expected {n} values, got {len(v)}")
    return v


def _box(text):
    return _vector(text, 3)


def _int_list(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_scenario_args(p):
    p.add_argument("--robots", type=int, help="number of robots")
    p.add_argument("--occupancy", type=float, default=0.2, help="ellipsoid volume / box volume")
    p.add_argument("--box", type=_box, default=[4.0, 4.0, 2.0], help="box aspect X,Y,Z (m)")
    p.add_argument("--model", default="firefly", help=f"one of {sorted(MODELS)} or 'hetero'")
    p.add_argument("--preset", help="circleN, hetero or densityN")
    p.add_argument("--seed", type=int, help="scenario and noise seed (default 0)")


def _add_run_args(p):
    p.add_argument("--scenario", type=Path, help="scenario file (otherwise generated)")
    p.add_argument("--config", type=Path, help="run config file; flags override it")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--replan-hz", type=float)
    p.add_argument("--sim-hz", type=float)
    p.add_argument("--time-budget", type=float)
    p.add_argument("--goal-tol", type=float)
    p.add_argument("--margin", type=float, help="extra planning clearance (m)")
    p.add_argument("--plant", choices=("perfect", "lagged"), help="tracking surrogate")
    p.add_argument("--weights", type=Path, help="YAML file of cost weights")
    for name in ("q-dynm", "q-obs", "q-lim", "k-t", "k-p"):
        p.add_argument(f"--{name}", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="swarmtraj", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="generate a scenario file")
    _add_scenario_args(p)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")

    p = sub.add_parser("run", help="simulate one scenario")
    _add_scenario_args(p)
    _add_run_args(p)
    p.add_argument("--out", type=Path, help="directory for trajectories and metrics")

    p = sub.add_parser("sweep", help="success/timing table over seeds and robot counts")
    _add_scenario_args(p)
    _add_run_args(p)
    p.add_argument("--robot-counts", type=_int_list, default=[2, 4, 8])
    p.add_argument("--seeds", type=int, default=25, help="seeds 0..N-1 per row")
    p.add_argument("--modes", default="shared", help="comma-separated modes")
    p.add_argument("--out", type=Path, help="directory for the sweep table")

    p = sub.add_parser("primitive", help="solve one motion primitive")
    p.add_argument("--p0", type=_vector, default=[0.0], help="start position")
    p.add_argument("--v0", type=_vector, help="start velocity (default zero)")
    p.add_argument("--a0", type=_vector, help="start acceleration (default zero)")
    p.add_argument("--goal", type=_vector, default=[1.0], help="goal position")
    p.add_argument("--t-min", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=60.0)
    p.add_argument("--bench", type=int, default=0, help="repeat N times and report µs stats")
    return parser


def make_scenario(args, n=None, seed=None):
    n = args.robots if n is None else n
    if seed is None:
        seed = args.seed or 0
    if args.preset:
        return preset(args.preset, n=n, seed=seed, occupancy=args.occupancy)
    if n is None:
        raise UsageError("give --robots, --preset or --scenario")
    return generate_scenario(n, args.occupancy, tuple(args.box), seed=seed, models=args.model)


def make_config(args):
    cfg = io.load_config(args.config) if args.config else RunConfig()
    kw = {}
    for flag, key in (("mode", "mode"), ("replan_hz", "replan_hz"), ("sim_hz", "sim_hz"),
                      ("time_budget", "time_budget"), ("goal_tol", "goal_tol"),
                      ("margin", "margin")):
        value = getattr(args, flag, None)
        if value is not None:
            kw[key] = value
    if getattr(args, "plant", None):
        kw["plant"] = PlantParams() if args.plant == "perfect" else PlantParams.lagged()
    weights = cfg.weights
    if getattr(args, "weights", None):
        weights = io.load_weights(args.weights, weights)
    overrides = {k: getattr(args, k) for k in ("q_dynm", "q_obs", "q_lim", "k_t", "k_p")
                 if getattr(args, k, None) is not None}
    if overrides:
        weights = type(weights)(**{**weights.__dict__, **overrides})
    kw["weights"] = weights
    if args.seed is not None:
        kw["seed"] = args.seed
    return cfg.with_(**kw)


def cmd_scenario(args):
    sc = make_scenario(args)
    args.out.mkdir(parents=True, exist_ok=True)
    path = io.save_scenario(sc, args.out / "scenario.yaml")
    print(f"{path}  robots={sc.n_robots} occupancy={sc.occupied_fraction():.4f}")
    return EXIT_OK


def cmd_run(args):
    sc = io.load_scenario(args.scenario) if args.scenario else make_scenario(args)
    cfg = make_config(args)
    report = run(sc, cfg)
    summary, timing = metrics(report)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        io.save_scenario(sc, args.out / "scenario.yaml")
        io.save_config(cfg, args.out / "config.yaml")
        io.save_metrics(summary, args.out / "metrics.yaml")
        io.save_timing(timing, args.out / "timing.yaml")
        if report.samples is not None:
            io.write_trajectories(report, args.out / "trajectories.csv")
    print(yaml.safe_dump(summary, sort_keys=True), end="")
    return EXIT_OK if summary["success"] else EXIT_FAIL


def cmd_sweep(args):
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    bad = set(modes) - set(MODES)
    if bad:
        raise UsageError(f"unknown modes {sorted(bad)}")
    base = make_config(args).with_(record=False)
    rows = []
    for mode in modes:
        for n in args.robot_counts:
            summaries, timings = [], []
            for seed in range(args.seeds):
                sc = make_scenario(args, n=n, seed=seed)
                s, t = metrics(run(sc, base.with_(mode=mode, seed=seed)))
                summaries.append(s)
                timings.append(t)
            row = {"mode": mode, "robots": n, "scenario": summaries[0]["scenario"]}
            row.update(aggregate(summaries, timings))
            rows.append(row)
            opt = (row["timing"]["optimization"] or {}).get("mean")
            print(f"{mode:9s} n={n:3d} success={row['success_rate']:.2f} "
                  f"collisions={row['collisions']} deadlocks={row['deadlocks']} "
                  f"opt_mean_us={'-' if opt is None else f'{opt:.0f}'}", flush=True)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        io._dump({"rows": rows}, args.out / "sweep.yaml")
    return EXIT_OK


def cmd_primitive(args):
    p0 = np.asarray(args.p0, dtype=float)
    n = p0.size
    v0 = np.zeros(n) if args.v0 is None else np.asarray(args.v0, dtype=float)
    a0 = np.zeros(n) if args.a0 is None else np.asarray(args.a0, dtype=float)
    goal = np.asarray(args.goal, dtype=float)
    if not (v0.size == a0.size == goal.size == n):
        raise UsageError("p0, v0, a0 and goal need the same number of dimensions")
    x0 = np.column_stack([p0, v0, a0])
    opts = PrimitiveOptions(t_min=args.t_min, t_max=args.t_max)
    traj, branch = solve_min_time(x0, goal, opts, return_info=True)
    out = {
        "duration": float(traj.duration),
        "branch": branch,
        "average_cost": float(average_cost(traj)),
        "peak_jerk": float(np.abs(traj.jerk(np.linspace(0.0, traj.duration, 101))).max()),
        "coefficients": [[float(c) for c in row] for row in traj.coeffs],
    }
    if args.bench > 0:
        samples = []
        for _ in range(args.bench):
            t0 = time.perf_counter_ns()
            solve_min_time(x0, goal, opts)
            samples.append((time.perf_counter_ns() - t0) / 1e3)
        out["timing_us"] = timing_stats(samples)
    print(yaml.safe_dump(out, sort_keys=False), end="")
    return EXIT_OK


COMMANDS = {"scenario": cmd_scenario, "run": cmd_run, "sweep": cmd_sweep,
            "primitive": cmd_primitive}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 for --help
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, io.FormatError, FileNotFoundError) as exc:
        print(f"swarmtraj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SwarmTrajError, ValueError) as exc:
        # bad parameter values surface as ValueError from the dataclass checks
        print(f"swarmtraj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"swarmtraj: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
