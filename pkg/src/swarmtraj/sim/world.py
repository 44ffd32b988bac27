"""World state, plant surrogate and event detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..tracking import TrackingHistory
from ..trajectory import QuinticTrajectory

ACTIVE, AT_GOAL, DEADLOCKED, COLLIDED = "active", "at-goal", "deadlocked", "collided"


@dataclass(frozen=True)
class PlantParams:
    """Tracking surrogate.

    Position follows the planned position through a first-order lag,
    ``p' = φ v_ref + λ (p_ref - p) + w``, with rate ``lag_rate`` (λ, 1/s) and
    velocity feed-forward fraction ``feedforward`` (φ). The disturbance ``w``
    is driven by bounded uniform acceleration noise of magnitude ``noise``
    (m/s^2) and leaks at ``noise_decay`` (1/s). ``lag_rate=None`` means
    perfect tracking.
    """

    lag_rate: float | None = None
    noise: float = 0.0
    noise_decay: float = 2.0
    feedforward: float = 0.0

    def __post_init__(self):
        if self.lag_rate is not None and self.lag_rate <= 0:
            raise ValueError("lag_rate must be positive (or None for perfect tracking)")
        if self.noise < 0 or self.noise_decay < 0:
            raise ValueError("noise parameters must be non-negative")
        if not 0.0 <= self.feedforward <= 1.0:
            raise ValueError("feedforward must lie in [0, 1]")

    @property
    def perfect(self):
        return self.lag_rate is None

    @classmethod
    def lagged(cls, lag_rate=8.0, noise=3.0, noise_decay=2.0, feedforward=0.5):
        return cls(lag_rate, noise, noise_decay, feedforward)


def stack_states(coeffs, durations, tau):
    """States of many quintics at their local times.

    ``coeffs`` is ``(R, N, 6)``, ``durations`` and ``tau`` are ``(R,)``.
    Returns ``(R, N, 3)``; past its duration each row holds its end position.
    """
    t = np.clip(tau, 0.0, durations)
    p = np.empty(coeffs.shape[:2] + (3,))
    pw = t[:, None] ** np.arange(6)
    p[:, :, 0] = np.einsum("rnk,rk->rn", coeffs, pw)
    p[:, :, 1] = np.einsum("rnk,rk->rn", coeffs[:, :, 1:] * np.arange(1, 6), pw[:, :5])
    p[:, :, 2] = np.einsum("rnk,rk->rn", coeffs[:, :, 2:] * np.array([2.0, 6.0, 12.0, 20.0]),
                           pw[:, :4])
    past = tau >= durations
    p[past, :, 1:] = 0.0
    return p


@dataclass
class WorldState:
    """Per-robot true state, current plan and bookkeeping."""

    time: float
    true_states: np.ndarray  # (R, N, 3)
    plans: list  # QuinticTrajectory per robot
    plan_starts: np.ndarray  # (R,)
    status: list
    tracking: list  # TrackingHistory per robot
    noise_state: np.ndarray  # (R, N) velocity disturbance
    collided: np.ndarray  # (R,) bool
    progress: list = field(default_factory=list)  # per robot [(t, goal distance)]

    @classmethod
    def initial(cls, starts, horizon=20, weights=(1.0, 0.1, 0.01), clamps=None):
        starts = np.asarray(starts, dtype=float)
        R, n = starts.shape
        states = np.zeros((R, n, 3))
        states[:, :, 0] = starts
        clamps = [None] * R if clamps is None else clamps
        return cls(
            0.0, states, [QuinticTrajectory.hold(p) for p in starts], np.zeros(R),
            [ACTIVE] * R, [TrackingHistory(horizon, weights, 0.0, c) for c in clamps],
            np.zeros((R, n)), np.zeros(R, dtype=bool), [[] for _ in range(R)],
        )

    @property
    def n_robots(self):
        return len(self.plans)

    def planned_states(self, t=None):
        t = self.time if t is None else t
        coeffs = np.array([p.coeffs for p in self.plans])
        durations = np.array([p.duration for p in self.plans])
        return stack_states(coeffs, durations, t - self.plan_starts)


def step(world, dt, plant=PlantParams(), rng=None):
    """Advance the plant by ``dt``; the world is updated in place and returned.

    Perfect tracking copies the planned state. Otherwise the position error
    ``e = p - p_ref`` obeys ``e' = -λ e - (1 - φ) v_ref + w``, integrated
    exactly with ``v_ref`` and ``w`` held over the step. Robots that are
    not active still track their (held) plan.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t_new = world.time + dt
    ref_new = world.planned_states(t_new)
    if plant.perfect:
        world.true_states = ref_new
        world.time = t_new
        return world

    lam, phi = plant.lag_rate, plant.feedforward
    ref_old = world.planned_states(world.time)
    decay = math.exp(-lam * dt)
    v_ref = ref_old[:, :, 1]
    w = world.noise_state
    e = world.true_states[:, :, 0] - ref_old[:, :, 0]
    e_new = decay * e + (1.0 - decay) / lam * (w - (1.0 - phi) * v_ref)

    if plant.noise > 0:
        if rng is None:
            raise ValueError("a seeded rng is required when noise > 0")
        n = rng.uniform(-plant.noise, plant.noise, size=w.shape)
    else:
        n = np.zeros_like(w)
    mu = plant.noise_decay
    w_new = (math.exp(-mu * dt) * w + (1.0 - math.exp(-mu * dt)) / mu * n) if mu > 0 else w + dt * n

    de = -lam * e_new - (1.0 - phi) * ref_new[:, :, 1] + w_new
    x = np.empty_like(ref_new)
    x[:, :, 0] = ref_new[:, :, 0] + e_new
    x[:, :, 1] = ref_new[:, :, 1] + de
    x[:, :, 2] = phi * ref_new[:, :, 2] - lam * de + n - mu * w_new
    world.true_states = x
    world.noise_state = w_new
    world.time = t_new
    return world


def pair_separations(positions, radii):
    """Scaled separation for every pair ``i < j``.

    ``positions`` and ``radii`` are ``(R, N)``; the pair radius is the sum of
    the two robots' radii. Returns ``(i, j, d)`` arrays.
    """
    i, j = np.triu_indices(positions.shape[0], k=1)
    diff = (positions[i] - positions[j]) / (radii[i] + radii[j])
    return i, j, np.sum(diff * diff, axis=1)


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    pair: tuple
    separation: float


def detect_collisions(positions, radii, time=0.0, in_contact=None):
    """Collision events for pairs with ``d <= 1`` under the true radii.

    With ``in_contact`` (a set of pairs, updated in place) only pairs that
    were not already touching produce an event, so one contact episode is
    reported once.
    """
    positions = np.asarray(positions, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if positions.shape[0] < 2:
        return []
    i, j, d = pair_separations(positions, radii)
    hit = d <= 1.0
    events = []
    current = set()
    for a, b, dv in zip(i[hit].tolist(), j[hit].tolist(), d[hit].tolist()):
        current.add((a, b))
        if in_contact is None or (a, b) not in in_contact:
            events.append(CollisionEvent(float(time), (a, b), dv))
    if in_contact is not None:
        in_contact.clear()
        in_contact.update(current)
    return events


def detect_deadlock(times, distances, window=5.0, eps=0.05, at_goal=False):
    """Whether goal distance fell by less than ``eps`` over the last ``window`` s.

    Needs history spanning at least ``window`` seconds; shorter histories
    are never deadlocked. The decrease is measured between the sample at
    the window start and the latest one, so oscillation without net
    progress counts as a deadlock.
    """
    if at_goal or len(times) == 0:
        return False
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    t_now = times[-1]
    if t_now - times[0] < window - 1e-9:
        return False
    k = int(np.searchsorted(times, t_now - window + 1e-9, side="right")) - 1
    k = max(k, 0)
    return bool(distances[k] - distances[-1] < eps)
