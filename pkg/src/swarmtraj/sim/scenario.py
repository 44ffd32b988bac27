"""Scenario definitions and generators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PackingFailure
from ..optimizer import Limits, RobotShape, scaled_separation

ETA = 3.0

# name: (r1 [m], velocity [m/s], acceleration [m/s^2], jerk [m/s^3])
MODELS = {
    "hummingbird": (0.4, 2.0, 4.0, 20.0),
    "firefly": (0.5, 2.0, 8.0, 20.0),
    "neo": (0.6, 4.0, 12.0, 60.0),
}
HETERO_CYCLE = ("hummingbird", "firefly", "neo")
# default start-angle perturbation of the circle preset (rad)
CIRCLE_JITTER = 0.05


@dataclass(frozen=True)
class RobotSpec:
    model: str
    start: np.ndarray
    goal: np.ndarray
    shape: RobotShape
    limits: Limits

    @classmethod
    def from_model(cls, model, start, goal, eta=ETA):
        try:
            r1, vel, acc, jerk = MODELS[model]
        except KeyError:
            raise ValueError(f"unknown robot model {model!r}; known: {sorted(MODELS)}")
        return cls(model, np.asarray(start, dtype=float), np.asarray(goal, dtype=float),
                   RobotShape(r1, eta), Limits(vel, acc, jerk))


@dataclass
class Scenario:
    box: np.ndarray
    robots: list = field(default_factory=list)
    seed: int | None = None
    occupancy: float | None = None
    name: str = "custom"

    @property
    def n_robots(self):
        return len(self.robots)

    def occupied_fraction(self):
        vol = sum(r.shape.volume() for r in self.robots)
        return vol / float(np.prod(self.box))


def _model_list(n, models):
    if isinstance(models, str):
        if models == "hetero":
            return [HETERO_CYCLE[i % 3] for i in range(n)]
        return [models] * n
    models = list(models)
    return [models[i % len(models)] for i in range(n)]


def _min_pair_separation(points, radii):
    """Smallest scaled separation over all pairs (``inf`` for < 2 points)."""
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = min(best, scaled_separation(points[i], points[j], radii[i] + radii[j]))
    return best


def _sample_positions(rng, lo, hi, radii, retries, clearance):
    """Rejection-sample one position per robot, pairwise ``d > clearance``."""
    pts = []
    for i, r in enumerate(radii):
        for _ in range(retries):
            p = rng.uniform(lo, hi)
            if all(scaled_separation(p, q, r + radii[j]) > clearance for j, q in enumerate(pts)):
                pts.append(p)
                break
        else:
            raise PackingFailure(f"could not place robot {i} after {retries} attempts")
    return pts


def generate_scenario(n, occupancy=0.2, box=(4.0, 4.0, 2.0), seed=0, models="firefly",
                      retries=2000, clearance=1.0, rescale=True):
    """Random start/goal scenario at a target occupancy.

    The box keeps the aspect ratio of ``box`` and is rescaled so that the
    summed ellipsoid volume divided by the box volume equals ``occupancy``
    (unless ``rescale`` is false, in which case ``box`` is used as is and the
    occupancy is whatever results). Starts and goals are sampled uniformly in
    the box with every pair separated by scaled distance ``> clearance``.
    """
    if n < 1:
        raise ValueError("need at least one robot")
    rng = np.random.default_rng(seed)
    names = _model_list(n, models)
    specs = [RobotSpec.from_model(m, np.zeros(3), np.zeros(3)) for m in names]
    box = np.asarray(box, dtype=float)
    volume = sum(s.shape.volume() for s in specs)
    if rescale:
        if not 0 < occupancy < 1:
            raise ValueError("occupancy must lie in (0, 1)")
        box = box * (volume / occupancy / np.prod(box)) ** (1.0 / 3.0)
    radii = [s.shape.radii(3) for s in specs]
    lo, hi = -0.5 * box, 0.5 * box
    starts = _sample_positions(rng, lo, hi, radii, retries, clearance)
    goals = _sample_positions(rng, lo, hi, radii, retries, clearance)
    robots = [RobotSpec(s.model, p, g, s.shape, s.limits) for s, p, g in zip(specs, starts, goals)]
    sc = Scenario(box, robots, seed, None, f"random{n}")
    sc.occupancy = sc.occupied_fraction()
    return sc


def circle_preset(n=8, radius=4.0, height=1.7, model="firefly", jitter=0.0, seed=None):
    """Antipodal swap on a circle seen from above, flown on two altitude layers.

    Robot ``k`` starts at angle ``2πk/n`` and flies to the diametrically
    opposite point of the circle at its own altitude: ``+height`` for the
    first half of the robots, ``-height`` for the rest. Antipodal partners
    therefore sit on different layers. With ``2 height`` above the combined
    vertical radius they never interact, while robots sharing a layer all
    cross at the centre.

    ``jitter`` (radians) perturbs each start angle uniformly using ``seed``.
    """
    rng = np.random.default_rng(seed)
    robots = []
    upper = (n + 1) // 2
    for k in range(n):
        theta = 2.0 * math.pi * k / n
        if jitter:
            theta += rng.uniform(-jitter, jitter)
        z = height if k < upper else -height
        start = np.array([radius * math.cos(theta), radius * math.sin(theta), z])
        goal = np.array([-start[0], -start[1], z])
        robots.append(RobotSpec.from_model(model, start, goal))
    box = np.array([2.0 * radius + 2.0, 2.0 * radius + 2.0, 2.0 * height + 2.0])
    sc = Scenario(box, robots, seed, None, f"circle{n}")
    sc.occupancy = sc.occupied_fraction()
    return sc


def density_preset(n, seed=0, goal_box=(4.0, 4.0, 2.0), model="firefly", retries=5000):
    """Goals packed into a fixed box; starts spread over a box twice as wide."""
    rng = np.random.default_rng(seed)
    specs = [RobotSpec.from_model(m, np.zeros(3), np.zeros(3)) for m in _model_list(n, model)]
    radii = [s.shape.radii(3) for s in specs]
    gb = np.asarray(goal_box, dtype=float)
    sb = gb * np.array([2.0, 2.0, 1.0])
    goals = _sample_positions(rng, -0.5 * gb, 0.5 * gb, radii, retries, 1.0)
    starts = _sample_positions(rng, -0.5 * sb, 0.5 * sb, radii, retries, 1.0)
    robots = [RobotSpec(s.model, p, g, s.shape, s.limits) for s, p, g in zip(specs, starts, goals)]
    sc = Scenario(gb, robots, seed, None, f"density{n}")
    sc.occupancy = sc.occupied_fraction()
    return sc


def preset(name, n=None, seed=0, occupancy=0.2):
    """Named presets: ``circleN``, ``hetero``, ``densityN``."""
    if name.startswith("circle"):
        return circle_preset(int(name[6:] or n or 8), jitter=CIRCLE_JITTER, seed=seed)
    if name == "hetero":
        sc = generate_scenario(n or 21, occupancy, seed=seed, models="hetero")
        sc.name = f"hetero{sc.n_robots}"
        return sc
    if name.startswith("density"):
        return density_preset(int(name[7:] or n or 8), seed=seed)
    raise ValueError(f"unknown preset {name!r}")
