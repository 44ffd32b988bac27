"""Lockstep decentralized replanning loop."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..compensator import HorizonBuffer, compose_prediction, fit_compensator
from ..errors import SwarmTrajError
from ..optimizer import CostWeights, Peer, PlanContext, RobotShape, plan
from ..primitive import PrimitiveOptions, solve_min_time
from ..trajectory import QuinticTrajectory
from .world import (
    ACTIVE, AT_GOAL, DEADLOCKED, PlantParams, WorldState, detect_collisions,
    detect_deadlock, pair_separations, step,
)

log = logging.getLogger(__name__)

MODES = ("shared", "predicted")
STAGES = ("primitive", "least_squares", "optimization", "total")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "shared"
    replan_hz: float = 10.0
    sim_hz: float = 100.0
    time_budget: float = 60.0
    goal_tol: float = 0.1
    seed: int = 0
    # swarm default: a stiffer collision weight than the single-plan default
    weights: CostWeights = field(default_factory=lambda: CostWeights(q_obs=1e4))
    plant: PlantParams = field(default_factory=PlantParams)
    primitive: PrimitiveOptions = field(default_factory=PrimitiveOptions)
    # own plans restart from the planned state ("reference") or the measured one
    replan_from: str = "reference"
    buffer_size: int = 10
    tracking_horizon: int = 20
    tracking_weights: tuple = (1.0, 0.1, 0.01)
    deadlock_window: float = 5.0
    deadlock_eps: float = 0.05
    # duration search interval around the centre c: [max(t_min, lo c), max(hi c, c + span)]
    bracket_low: float = 0.5
    bracket_high: float = 2.0
    bracket_span: float = 2.0
    t_max: float = 60.0
    # clearance added to the tracking pad ξ when planning (m)
    margin: float = 0.0
    scan_points: int = 16
    xtol: float = 1e-4
    # "auto": global scan for the first plan, local search from the warm start after
    strategy: str = "auto"
    record: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.replan_hz <= 0 or self.sim_hz <= 0:
            raise ValueError("rates must be positive")
        if self.sim_hz < self.replan_hz:
            raise ValueError("sim_hz must be >= replan_hz")
        ratio = self.sim_hz / self.replan_hz
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("sim_hz must be an integer multiple of replan_hz")
        if self.time_budget <= 0 or self.goal_tol <= 0:
            raise ValueError("time_budget and goal_tol must be positive")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        if self.replan_from not in ("reference", "measured"):
            raise ValueError("replan_from must be 'reference' or 'measured'")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class Broadcast:
    """What one robot transmits at a replan tick."""

    robot_id: int
    state: np.ndarray
    goal: np.ndarray
    shape: RobotShape
    # only populated in shared mode, already shifted to the tick time
    trajectory: QuinticTrajectory | None = None


@dataclass
class RunReport:
    scenario: str
    mode: str
    seed: int
    n_robots: int
    times: np.ndarray
    samples: np.ndarray | None  # (ticks, R, N, 3) true states
    collisions: list
    deadlocks: list  # (time, robot) when a robot is first flagged in an episode
    planner_errors: list  # (time, robot, message)
    status: list
    collided: list
    reached: list  # arrival time per robot or None
    min_separation: float
    termination: str
    timings: dict
    replans: int
    duration_jumps: int
    final_time: float

    @property
    def success(self):
        return all(s == AT_GOAL for s in self.status) and not self.collisions


class Predictor:
    """Peer predictions from broadcasts: primitive plus residual compensator.

    Every observer sees the same broadcasts and therefore holds identical
    per-peer buffers, so one instance serves all agents.
    """

    def __init__(self, n_robots, period, buffer_size=10, options=None):
        self.period = period
        self.options = options or PrimitiveOptions()
        self.buffers = [HorizonBuffer(buffer_size) for _ in range(n_robots)]
        self._previous = [None] * n_robots  # (time, primitive)

    def update(self, snapshot, now, timings):
        """Predicted trajectories for every broadcast, indexed by robot id."""
        out = {}
        for b in snapshot:
            i = b.robot_id
            t0 = time.perf_counter_ns()
            prim = solve_min_time(b.state, b.goal[:, 0], self.options)
            t1 = time.perf_counter_ns()
            timings["primitive"].append((t1 - t0) / 1e3)
            prev = self._previous[i]
            if prev is not None:
                self.buffers[i].push(b.state, prev[1].state(now - prev[0]), now)
            self._previous[i] = (now, prim)
            pred = prim
            if len(self.buffers[i]) >= 2:
                t2 = time.perf_counter_ns()
                comp = fit_compensator(self.buffers[i], prim.duration, dt=self.period)
                pred = compose_prediction(prim, comp)
                timings["least_squares"].append((time.perf_counter_ns() - t2) / 1e3)
            out[i] = pred
        return out


def _goal_state(goal):
    g = np.zeros((goal.size, 3))
    g[:, 0] = goal
    return g


def plan_agent(i, snapshot, peer_trajs, x0, xi, warm, spec, cfg):
    """One agent's replanning step: a pure function of its inputs.

    ``snapshot`` supplies goals and shapes, ``peer_trajs`` maps robot id to
    the trajectory this agent assumes for that peer. Returns a PlanResult.
    """
    own = snapshot[i]
    shape = RobotShape(own.shape.r1, own.shape.eta, xi + cfg.margin)
    peers = [Peer(peer_trajs[b.robot_id], b.shape) for b in snapshot if b.robot_id != i]
    t_min = cfg.primitive.t_min
    if warm is None:
        opts = cfg.primitive
        if opts.v_ref is None:
            opts = replace(opts, v_ref=spec.limits.velocity)
        c = solve_min_time(x0, own.goal[:, 0], opts).duration
    else:
        c = max(warm, t_min)
    lo = max(t_min, cfg.bracket_low * c)
    hi = min(max(cfg.bracket_high * c, c + cfg.bracket_span), cfg.t_max)
    if hi <= lo:
        lo, hi = t_min, max(cfg.t_max, 2 * t_min)
    ctx = PlanContext(x0, own.goal, shape, spec.limits, cfg.weights, peers, lo, hi,
                      warm if warm is not None and lo <= warm <= hi else None)
    return plan(ctx, cfg.scan_points, cfg.xtol, strategy=cfg.strategy)


def run(scenario, config=None):
    """Simulate ``scenario`` under ``config`` and return a :class:`RunReport`."""
    cfg = RunConfig() if config is None else config
    R = scenario.n_robots
    specs = scenario.robots
    dt = 1.0 / cfg.sim_hz
    ratio = int(round(cfg.sim_hz / cfg.replan_hz))
    period = ratio * dt
    n_ticks = int(math.ceil(cfg.time_budget * cfg.sim_hz - 1e-9))
    rng = np.random.default_rng(cfg.seed)

    goals = np.array([s.goal for s in specs])
    true_radii = np.array([s.shape.radii(3) for s in specs])
    world = WorldState.initial(
        [s.start for s in specs], cfg.tracking_horizon, cfg.tracking_weights,
        clamps=[s.shape.r1 for s in specs],
    )
    predictor = Predictor(R, period, cfg.buffer_size, cfg.primitive) if cfg.mode == "predicted" else None
    timings = {k: [] for k in STAGES}
    durations = [None] * R
    reached = [None] * R
    collisions, deadlocks, errors = [], [], []
    in_contact = set()
    flagged = [False] * R
    min_sep = math.inf
    replans = jumps = 0
    times, samples = [], []
    termination = "timeout"

    for tick in range(n_ticks + 1):
        now = tick * dt
        pos = world.true_states[:, :, 0]
        collisions += detect_collisions(pos, true_radii, now, in_contact)
        for a, b in in_contact:
            world.collided[a] = world.collided[b] = True
        if R > 1:
            min_sep = min(min_sep, float(pair_separations(pos, true_radii)[2].min()))
        dist = np.linalg.norm(pos - goals, axis=1)
        for i in range(R):
            if world.status[i] != AT_GOAL and dist[i] <= cfg.goal_tol:
                world.status[i] = AT_GOAL
                reached[i] = now
        if cfg.record:
            times.append(now)
            samples.append(world.true_states.copy())
        if all(s == AT_GOAL for s in world.status):
            termination = "success" if not collisions else "collision"
            break

        if tick % ratio == 0:
            planned_now = world.planned_states(now)
            shifted = [p.shifted(now - s) for p, s in zip(world.plans, world.plan_starts)]
            snapshot = [
                Broadcast(i, world.true_states[i].copy(), _goal_state(goals[i]),
                          specs[i].shape, shifted[i] if cfg.mode == "shared" else None)
                for i in range(R)
            ]
            if predictor is not None:
                pred_times = {"primitive": [], "least_squares": []}
                peer_trajs = predictor.update(snapshot, now, pred_times)
                for k in pred_times:
                    timings[k] += pred_times[k]
                per_robot_pred = sum(pred_times["primitive"]) + sum(pred_times["least_squares"])
                per_robot_pred *= (R - 1) / R
            else:
                peer_trajs = {b.robot_id: b.trajectory for b in snapshot}
                per_robot_pred = 0.0

            new_plans = {}
            for i in range(R):
                if world.status[i] == AT_GOAL:
                    continue
                if tick > 0:
                    world.tracking[i].update(planned_now[i], world.true_states[i])
                xi = world.tracking[i].error()
                x0 = planned_now[i] if cfg.replan_from == "reference" else world.true_states[i]
                warm = None if durations[i] is None else max(durations[i] - period, cfg.primitive.t_min)
                t0 = time.perf_counter_ns()
                try:
                    res = plan_agent(i, snapshot, peer_trajs, x0, xi, warm, specs[i], cfg)
                except (SwarmTrajError, ArithmeticError, ValueError) as exc:
                    log.warning("robot %d planner failed at t=%.2f: %s", i, now, exc)
                    errors.append((now, i, str(exc)))
                    continue
                elapsed = (time.perf_counter_ns() - t0) / 1e3
                timings["optimization"].append(elapsed)
                timings["total"].append(elapsed + per_robot_pred)
                if durations[i] is not None and abs(res.duration - durations[i]) > 0.5 * durations[i]:
                    jumps += 1
                    log.debug("robot %d duration jump %.3f -> %.3f", i, durations[i], res.duration)
                new_plans[i] = res
                replans += 1
            # barrier: plans take effect only after every agent has planned
            for i, res in new_plans.items():
                world.plans[i] = res.trajectory
                world.plan_starts[i] = now
                durations[i] = res.duration

            remaining = [i for i in range(R) if world.status[i] != AT_GOAL]
            for i in remaining:
                world.progress[i].append((now, float(dist[i])))
                hist = world.progress[i]
                # keep only what the window needs
                while len(hist) > 2 and hist[1][0] <= now - cfg.deadlock_window:
                    hist.pop(0)
                ts, ds = zip(*hist)
                stuck = detect_deadlock(ts, ds, cfg.deadlock_window, cfg.deadlock_eps)
                world.status[i] = DEADLOCKED if stuck else ACTIVE
                if stuck and not flagged[i]:
                    deadlocks.append((now, i))
                flagged[i] = stuck
            if remaining and all(world.status[i] == DEADLOCKED for i in remaining):
                termination = "deadlock"
                break

        if tick == n_ticks:
            break
        step(world, dt, cfg.plant, rng)

    if termination == "timeout" and all(s == AT_GOAL for s in world.status):
        termination = "success" if not collisions else "collision"
    return RunReport(
        scenario=scenario.name, mode=cfg.mode, seed=cfg.seed, n_robots=R,
        times=np.array(times), samples=np.array(samples) if cfg.record else None,
        collisions=collisions, deadlocks=deadlocks, planner_errors=errors,
        status=list(world.status), collided=world.collided.tolist(), reached=reached,
        min_separation=min_sep, termination=termination, timings=timings,
        replans=replans, duration_jumps=jumps, final_time=world.time,
    )
