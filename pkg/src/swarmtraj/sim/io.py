"""Scenario, config and result files.

Scenarios, configs and metrics are YAML with sorted keys so that equal
content gives equal bytes. Trajectories are CSV, one row per robot per
recorded sim tick.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np
import yaml

from ..optimizer import CostWeights, Limits, RobotShape
from ..primitive import PrimitiveOptions
from .runner import RunConfig
from .scenario import RobotSpec, Scenario
from .world import PlantParams

TRAJECTORY_HEADER = ("tick", "robot_id", "t", "px", "py", "pz", "vx", "vy", "vz",
                     "ax", "ay", "az")


class FormatError(ValueError):
    """A file does not have the expected structure."""


def _floats(v):
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def _dump(data, path):
    text = yaml.safe_dump(data, sort_keys=True, default_flow_style=None)
    Path(path).write_text(text)
    return Path(path)


def _load(path):
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise FormatError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a mapping at top level")
    return data


# scenarios

def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "seed": sc.seed,
        "occupancy": None if sc.occupancy is None else float(sc.occupancy),
        "box": _floats(sc.box),
        "robots": [
            {
                "model": r.model,
                "start": _floats(r.start),
                "goal": _floats(r.goal),
                "shape": {"r1": float(r.shape.r1), "eta": float(r.shape.eta)},
                "limits": {"velocity": float(r.limits.velocity),
                           "acceleration": float(r.limits.acceleration),
                           "jerk": float(r.limits.jerk)},
            }
            for r in sc.robots
        ],
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        robots = []
        for r in d["robots"]:
            start = np.array(r["start"], dtype=float)
            goal = np.array(r["goal"], dtype=float)
            if start.shape != (3,) or goal.shape != (3,):
                raise FormatError("start and goal must be 3-vectors")
            robots.append(RobotSpec(str(r["model"]), start, goal,
                                    RobotShape(**r["shape"]), Limits(**r["limits"])))
        box = np.array(d["box"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed scenario: {exc}") from exc
    return Scenario(box, robots, d.get("seed"), d.get("occupancy"), d.get("name", "custom"))


def save_scenario(sc, path):
    return _dump(scenario_to_dict(sc), path)


def load_scenario(path):
    return scenario_from_dict(_load(path))


# configs

def config_to_dict(cfg: RunConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["tracking_weights"] = list(cfg.tracking_weights)
    return d


def config_from_dict(d: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a config from a (possibly partial) mapping on top of ``base``."""
    base = RunConfig() if base is None else base
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(d) - known
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(d)
    nested = {"weights": CostWeights, "plant": PlantParams, "primitive": PrimitiveOptions}
    for key, cls in nested.items():
        if key in kw and kw[key] is not None:
            try:
                kw[key] = dataclasses.replace(getattr(base, key), **kw[key])
            except TypeError as exc:
                raise FormatError(f"bad {key} section: {exc}") from exc
    if "tracking_weights" in kw:
        kw["tracking_weights"] = tuple(float(x) for x in kw["tracking_weights"])
    return base.with_(**kw)


def save_config(cfg, path):
    return _dump(config_to_dict(cfg), path)


def load_config(path, base=None):
    return config_from_dict(_load(path), base)


def load_weights(path, base=None):
    """Cost weights from a YAML mapping, either bare or under ``weights:``."""
    d = _load(path)
    d = d.get("weights", d)
    base = CostWeights() if base is None else base
    try:
        return dataclasses.replace(base, **d)
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# results

def save_metrics(summary, path):
    return _dump(summary, path)


def save_timing(timing, path):
    return _dump(timing, path)


def write_trajectories(report, path):
    """Executed states as CSV; requires a report recorded with ``record=True``."""
    if report.samples is None:
        raise ValueError("report has no recorded samples")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for k, (t, states) in enumerate(zip(report.times, report.samples)):
            for i, x in enumerate(states):
                # x is (3 dims, 3 derivatives); columns want p, v, a blocks
                w.writerow([k, i, f"{t:.6f}", *(f"{v:.9g}" for v in x.T.ravel())])
    return Path(path)


def read_trajectories(path):
    """``(ticks, robot_ids, t, states)`` with states shaped ``(rows, 3, 3)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    states = data[:, 3:].reshape(-1, 3, 3).transpose(0, 2, 1)
    return data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2], states
