"""Condensed trajectory optimization over the trajectory duration.

With both boundary states fixed, a quintic per dimension is fully determined
by its duration ``T``. The planner therefore minimizes a scalar function

    cost(T) = smoothness + limits + Σ_peers collision + K_t T²

where every term is integrated in closed form:

* smoothness is ``Q_dynm ∫ ||p'''||² dt``;
* the collision barrier integrates ``|d'(t)| exp(-K_p (d(t) - 1))`` where
  ``d`` is the ellipsoid-scaled squared separation, so it equals the total
  variation of ``-exp(-K_p (d - 1)) / K_p`` over the window;
* the limit barriers integrate ``|g'(t)| exp(K_p (g(t) - τ²))`` with
  ``g = ||p^(i)||²`` for velocity, acceleration and jerk.

Splitting the window at the real roots of ``d'`` (or ``g'``) gives monotone
pieces on which the integral telescopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator

from . import _kernels as _k
from . import poly
from .errors import BracketCollapse, SingularTransform
from .trajectory import QuinticTrajectory
from .validation import check_duration, check_is_fitted, check_state

# exponent arguments above this are continued linearly
EXP_CLAMP = _k.EXP_CLAMP
# barrier exponents below -CULL_EXPONENT are treated as zero when screening
CULL_EXPONENT = _k.CULL_EXPONENT


@dataclass(frozen=True)
class RobotShape:
    """Axis-aligned spheroid: horizontal radius ``r1``, vertical ``eta * r1``."""

    r1: float
    eta: float = 3.0
    xi: float = 0.0

    def __post_init__(self):
        if self.r1 <= 0:
            raise ValueError("r1 must be positive")
        if self.eta < 1:
            raise ValueError("eta must be >= 1")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")

    def radii(self, n_dims=3):
        r = np.full(n_dims, self.r1)
        if n_dims >= 3:
            r[2] = self.eta * self.r1
        return r

    def volume(self):
        return 4.0 / 3.0 * math.pi * self.r1**3 * self.eta


@dataclass(frozen=True)
class Limits:
    velocity: float
    acceleration: float
    jerk: float

    def __post_init__(self):
        if min(self.velocity, self.acceleration, self.jerk) <= 0:
            raise ValueError("limits must be positive")

    def as_array(self):
        return np.array([self.velocity, self.acceleration, self.jerk])


@dataclass(frozen=True)
class CostWeights:
    q_dynm: float = 1.0
    q_obs: float = 100.0
    q_lim: float = 10.0
    k_t: float = 1.0
    k_p: float = 10.0

    def __post_init__(self):
        for name in ("q_dynm", "q_obs", "q_lim", "k_t", "k_p"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Peer:
    trajectory: QuinticTrajectory
    shape: RobotShape


@dataclass
class PlanContext:
    """Everything one replanning step needs.

    ``goal`` is a position; the planned trajectory ends there at rest.
    ``t_warm`` seeds the search when given.
    """

    x0: np.ndarray
    goal: np.ndarray
    shape: RobotShape
    limits: Limits
    weights: CostWeights = field(default_factory=CostWeights)
    peers: list = field(default_factory=list)
    t_lo: float = 0.1
    t_hi: float = 20.0
    t_warm: float | None = None

    def __post_init__(self):
        self.x0 = check_state(self.x0, name="x0")
        goal = np.asarray(self.goal, dtype=float)
        if goal.ndim == 2:
            goal = check_state(goal, self.x0.shape[0], name="goal")
        else:
            goal = np.column_stack([goal.reshape(-1), np.zeros((goal.size, 2))])
            goal = check_state(goal, self.x0.shape[0], name="goal")
        self.goal = goal
        if not self.t_lo < self.t_hi:
            raise ValueError(f"need t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")


# -- condensation -----------------------------------------------------------

def transform_matrix(T):
    """Boundary-value matrix mapping ``(α3, α4, α5)`` to end-state gaps."""
    return np.array([
        [T**3, T**4, T**5],
        [3 * T**2, 4 * T**3, 5 * T**4],
        [6 * T, 12 * T**2, 20 * T**3],
    ])


def boundary_gaps(x0, x_end, T):
    """Right-hand side of the boundary system, one row per dimension."""
    p0, v0, a0 = x0[:, 0], x0[:, 1], x0[:, 2]
    return np.column_stack([
        x_end[:, 0] - (p0 + v0 * T + 0.5 * a0 * T * T),
        x_end[:, 1] - (v0 + a0 * T),
        x_end[:, 2] - a0,
    ])


def condense(x0, x_end, T):
    """Quintic joining state ``x0`` at ``t = 0`` to ``x_end`` at ``t = T``."""
    x0 = check_state(x0, name="x0")
    x_end = check_state(x_end, x0.shape[0], name="x_end")
    T = check_duration(T)
    if T < 1e-9:
        raise SingularTransform(f"duration {T} too small for the boundary solve")
    return QuinticTrajectory(_condensed_coeffs(x0, x_end, T), T)


def _condensed_coeffs(x0, x_end, T):
    out = np.empty((x0.shape[0], 6))
    _k.condensed_coeffs(x0, x_end, T, out)
    return out


# -- barrier potentials -----------------------------------------------------

def collision_potential(d, k_p):
    """Antiderivative in ``d`` of ``exp(min(-k_p (d - 1), EXP_CLAMP))``."""
    return _k.collision_potential(float(d), float(k_p))


def limit_potential(g, tau_sq, k_p):
    """Antiderivative in ``g`` of ``exp(min(k_p (g - τ²), EXP_CLAMP))``."""
    return _k.limit_potential(float(g), float(tau_sq), float(k_p))


# -- cost terms -------------------------------------------------------------

def smoothness_cost(traj, q_dynm=1.0):
    """``q_dynm ∫_0^T ||jerk||² dt`` in closed form."""
    if q_dynm == 0 or traj.duration == 0:
        return 0.0
    if traj.coeffs.shape[1] > 6:
        jerk = traj.derivative_coeffs(3)
        return q_dynm * sum(poly.integral_of_square(c, traj.duration) for c in jerk)
    return q_dynm * _k.jerk_energy(traj.coeffs, traj.duration)


def combined_radii(own, peer, n_dims=3, xi=None):
    """Per-axis radii of the pair's Minkowski ellipsoid plus the tracking pad."""
    xi = own.xi if xi is None else xi
    return own.radii(n_dims) + peer.radii(n_dims) + xi


def scaled_separation(p, q, radii):
    """``d = Σ_i ((p_i - q_i) / R_i)²``; ``d > 1`` means no contact."""
    diff = (np.asarray(p, dtype=float) - np.asarray(q, dtype=float)) / radii
    return np.sum(diff * diff, axis=-1)


@dataclass(frozen=True)
class _PeerArrays:
    """Peers stacked for the compiled cost kernels."""

    coeffs: np.ndarray  # (P, N, 6)
    durations: np.ndarray  # (P,)
    held: np.ndarray  # (P, N) end positions
    inv_r2: np.ndarray  # (P, N) 1 / R_i^2
    rmin: np.ndarray  # (P,) smallest combined radius

    @classmethod
    def build(cls, trajs, radii, n_dims=3):
        if not trajs:
            z = np.zeros((0, n_dims))
            return cls(np.zeros((0, n_dims, 6)), np.zeros(0), z, z.copy(), np.zeros(0))
        coeffs = np.ascontiguousarray([t.coeffs[:, :6] for t in trajs], dtype=float)
        durations = np.array([t.duration for t in trajs], dtype=float)
        held = np.array([t.position(t.duration) for t in trajs])
        radii = np.asarray(radii, dtype=float)
        return cls(coeffs, durations, held, 1.0 / radii**2, radii.min(axis=1))


def _collision_batch(own_coeffs, peers, k_p, t_end, signed=False, screen=False):
    """Unweighted collision barrier against each peer, ``(P,)``."""
    out = np.zeros(peers.durations.size)
    if out.size and t_end > 0:
        _k.collision_terms(np.ascontiguousarray(own_coeffs[:, :6], dtype=float), float(t_end),
                           peers.coeffs, peers.durations, peers.held, peers.inv_r2,
                           peers.rmin, float(k_p), signed, screen, out)
    return out


def collision_cost(traj, peer, own_shape, peer_shape, xi=None, q_obs=100.0, k_p=10.0,
                   horizon=None, form="scaled", signed=False):
    """Barrier cost of ``traj`` against one peer trajectory.

    The window is ``[0, min(T, horizon)]``; the peer holds its end position
    after its own duration. ``form="literal"`` integrates the unscaled
    printed numerator ``2 Σ (p_i - q_i)(v_i - w_i) exp(-k_p d)`` by
    quadrature instead, for comparison only.
    """
    n = traj.n_dims
    R = combined_radii(own_shape, peer_shape, n, xi)
    t_end = traj.duration if horizon is None else min(traj.duration, horizon)
    if form == "literal":
        return q_obs * _literal_collision(traj, peer, R, k_p, t_end)
    if form != "scaled":
        raise ValueError(f"unknown collision form {form!r}")
    peers = _PeerArrays.build([peer], [R], n)
    return q_obs * float(_collision_batch(traj.coeffs, peers, k_p, t_end, signed)[0])


def _literal_collision(traj, peer, R, k_p, t_end, n_points=256):
    if t_end <= 0:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(n_points)
    t = 0.5 * t_end * (x + 1.0)
    rel_p = traj.position(t) - peer.position(t)
    rel_v = traj.velocity(t) - peer.velocity(t)
    d = np.sum((rel_p / R) ** 2, axis=-1)
    f = 2.0 * np.sum(rel_p * rel_v, axis=-1) * np.exp(np.minimum(-k_p * d, EXP_CLAMP))
    return 0.5 * t_end * float(w @ f)


def limits_cost(traj, limits, q_lim=10.0, k_p=10.0, signed=False):
    """Soft dynamic-limit barrier for velocity, acceleration and jerk norms."""
    if q_lim == 0 or traj.duration == 0:
        return 0.0
    c = np.ascontiguousarray(traj.coeffs[:, :6], dtype=float)
    return q_lim * _k.limits_integral(c, traj.duration, limits.as_array() ** 2, float(k_p),
                                      signed, False)


# -- total cost and planner -------------------------------------------------

def _peer_arrays(ctx):
    cache = getattr(ctx, "_peer_cache", None)
    if cache is None:
        n = ctx.x0.shape[0]
        trajs = [p.trajectory for p in ctx.peers]
        radii = [combined_radii(ctx.shape, p.shape, n) for p in ctx.peers]
        cache = _PeerArrays.build(trajs, radii, n)
        ctx._peer_cache = cache
    return cache


def cost_terms(T, ctx, horizon=None, screen=True):
    """Breakdown of the condensed objective at duration ``T``.

    ``screen`` skips peers and limit terms whose barrier stays below
    ``e^-30`` of its contact value; see :mod:`swarmtraj._kernels`.
    """
    terms = np.zeros(4)
    _evaluate(T, ctx, horizon, screen, terms)
    return dict(zip(("smoothness", "limits", "collision", "time"), terms.tolist()))


def _evaluate(T, ctx, horizon, screen, terms):
    T = float(T)
    if T < 1e-9:
        raise SingularTransform(f"duration {T} too small for the boundary solve")
    w = ctx.weights
    peers = _peer_arrays(ctx)
    return _k.evaluate(ctx.x0, ctx.goal, T, ctx.limits.as_array() ** 2, w.q_dynm, w.q_obs,
                w.q_lim, w.k_t, w.k_p, peers.coeffs, peers.durations, peers.held,
                peers.inv_r2, peers.rmin, math.inf if horizon is None else float(horizon),
                screen, terms)


def total_cost(T, ctx, horizon=None, screen=True):
    """Condensed objective at duration ``T``."""
    return _evaluate(T, ctx, horizon, screen, np.zeros(4))


@dataclass
class PlanResult:
    trajectory: QuinticTrajectory
    duration: float
    cost: float
    evaluations: int
    bracket_collapse: bool = False


def _local_bracket(f, x, fx, lo, hi, step, growth=1.6, max_steps=40):
    """Walk downhill from ``x`` until the cost rises; return an interval holding a minimum."""
    right = min(x + step, hi)
    left = max(x - step, lo)
    fr = f(right) if right > x else np.inf
    fl = f(left) if left < x else np.inf
    if fx <= fr and fx <= fl:
        return left, right
    direction = 1.0 if fr < fl else -1.0
    prev, cur, fcur = x, (right if direction > 0 else left), min(fr, fl)
    for _ in range(max_steps):
        step *= growth
        nxt = min(max(cur + direction * step, lo), hi)
        if nxt == cur:
            return (prev, cur) if direction > 0 else (cur, prev)
        fn = f(nxt)
        if fn >= fcur:
            return (prev, nxt) if direction > 0 else (nxt, prev)
        prev, cur, fcur = cur, nxt, fn
    return (prev, cur) if direction > 0 else (cur, prev)


def plan(ctx, scan_points=16, xtol=1e-4, refine_candidates=2, horizon=None,
         strategy="auto", escape=None):
    """Minimize :func:`total_cost` over ``T`` in ``[ctx.t_lo, ctx.t_hi]``.

    ``strategy="global"``: a coarse evenly spaced scan (plus the warm start,
    if any) finds the basins (local minima of the scan) and the
    ``refine_candidates`` cheapest of them are refined with bounded Brent
    search inside their neighbouring cells.

    ``strategy="local"``: starting from ``ctx.t_warm``, walk downhill to
    bracket the nearest minimum and refine it with bounded Brent search.
    Successive replans then stay in the basin they are already in instead
    of jumping between, say, passing before or after a peer.

    ``"auto"`` is local when a warm start is given and global otherwise.

    With ``escape`` set, a local result whose collision term still exceeds
    ``escape * q_obs`` (a predicted near-contact) is compared against a
    global scan and the cheaper of the two is kept.
    """
    if strategy not in ("auto", "global", "local"):
        raise ValueError(f"unknown strategy {strategy!r}")
    lo, hi = float(ctx.t_lo), float(ctx.t_hi)
    warm = ctx.t_warm if ctx.t_warm is not None and lo <= ctx.t_warm <= hi else None
    if hi - lo < xtol:
        t = warm if warm is not None else lo
        traj = condense(ctx.x0, ctx.goal, max(t, 1e-6))
        return PlanResult(traj, traj.duration, total_cost(traj.duration, ctx, horizon), 1, True)
    if strategy == "auto":
        strategy = "local" if warm is not None else "global"
    if strategy == "local" and warm is None:
        raise ValueError("local strategy needs a warm start inside [t_lo, t_hi]")

    evaluations = 0

    def f(T):
        nonlocal evaluations
        evaluations += 1
        val = total_cost(float(T), ctx, horizon)
        return val if np.isfinite(val) else np.inf

    if strategy == "local":
        f_warm = f(warm)
        a, b = _local_bracket(f, warm, f_warm, lo, hi, max(0.02 * (hi - lo), 10 * xtol))
        res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": xtol})
        best_T, best_cost = (float(res.x), float(res.fun)) if res.fun <= f_warm else (warm, f_warm)
        if escape is not None and ctx.peers:
            hit = cost_terms(best_T, ctx, horizon)["collision"]
            if hit > escape * ctx.weights.q_obs:
                g_T, g_cost = _global_search(f, lo, hi, warm, scan_points, xtol, refine_candidates)
                if g_cost < best_cost:
                    best_T, best_cost = g_T, g_cost
        traj = condense(ctx.x0, ctx.goal, best_T)
        return PlanResult(traj, best_T, best_cost, evaluations)

    best_T, best_cost = _global_search(f, lo, hi, warm, scan_points, xtol, refine_candidates)
    traj = condense(ctx.x0, ctx.goal, best_T)
    return PlanResult(traj, best_T, best_cost, evaluations)


def _global_search(f, lo, hi, warm, scan_points, xtol, refine_candidates):
    grid = np.linspace(lo, hi, scan_points)
    if warm is not None:
        grid = np.unique(np.append(grid, warm))
    costs = np.array([f(T) for T in grid])

    order = np.argsort(costs, kind="stable")
    best_T, best_cost = grid[order[0]], costs[order[0]]
    # one candidate per basin: local minima of the scan, cheapest first
    left = np.concatenate([[np.inf], costs[:-1]])
    right = np.concatenate([costs[1:], [np.inf]])
    basins = [k for k in order if costs[k] <= left[k] and costs[k] <= right[k]]
    for k in basins[:refine_candidates]:
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(f, bounds=(a, b), method="bounded",
                              options={"xatol": xtol})
        if res.fun < best_cost or (res.fun == best_cost and res.x < best_T):
            best_T, best_cost = float(res.x), float(res.fun)
    return float(best_T), float(best_cost)


class CondensedPlanner(BaseEstimator):
    """Estimator form of :func:`plan`.

    ``fit(ctx)`` optimizes the duration for a :class:`PlanContext`;
    ``predict(t)`` samples the resulting states ``(len(t), n_dims, 3)``.
    """

    def __init__(self, scan_points=16, xtol=1e-4, refine_candidates=2, horizon=None,
                 strategy="auto", escape=None):
        self.strategy = strategy
        self.escape = escape
        self.scan_points = scan_points
        self.xtol = xtol
        self.refine_candidates = refine_candidates
        self.horizon = horizon

    def fit(self, ctx):
        res = plan(ctx, self.scan_points, self.xtol, self.refine_candidates, self.horizon,
                   self.strategy, self.escape)
        self.bracket_collapse_ = res.bracket_collapse
        self.result_ = res
        self.trajectory_ = res.trajectory
        self.duration_ = res.duration
        self.cost_ = res.cost
        return self

    def predict(self, t):
        check_is_fitted(self, "trajectory_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self.trajectory_.state(ti) for ti in t])

    def score(self, ctx=None):
        check_is_fitted(self, "trajectory_")
        return -self.cost_


__all__ = [
    "BracketCollapse", "CondensedPlanner", "CostWeights", "Limits", "Peer",
    "PlanContext", "PlanResult", "RobotShape", "collision_cost", "combined_radii",
    "condense", "cost_terms", "limits_cost", "plan", "scaled_separation",
    "smoothness_cost", "total_cost", "transform_matrix",
]
