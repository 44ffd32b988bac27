"""Jerk-smooth minimum-time motion primitives for a triple integrator.

Each dimension follows ``p''' = u``; the primitive minimizes
``∫_0^T (||u||^2 + 1) dt`` with the full initial state fixed, the final
position fixed and final velocity/acceleration free. For a given duration
the optimal jerk is ``u(t) = 10 Δ / T^3 (1 - t/T)^2`` per dimension, where
``Δ = p_end - (p0 + v0 T + a0 T^2 / 2)``. The optimal duration is a positive
root of a sextic obtained from the free-final-time condition ``H = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from . import poly
from .trajectory import QuinticTrajectory
from .validation import check_duration, check_is_fitted, check_position, check_state


@dataclass(frozen=True)
class PrimitiveOptions:
    t_min: float = 0.1
    t_max: float = 60.0
    sample_count: int = 64
    sample_spread: float = 0.5
    # None: fall back to the distance covered at 1 m/s
    v_ref: float | None = None
    # "total" picks the root with the lowest ∫(|u|^2 + 1) dt, "average" the
    # lowest time-averaged cost.
    root_selection: str = "total"

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise ValueError(f"need 0 < t_min < t_max, got {self.t_min}, {self.t_max}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 0 < self.sample_spread < 1:
            raise ValueError("sample_spread must lie in (0, 1)")
        if self.v_ref is not None and self.v_ref <= 0:
            raise ValueError("v_ref must be positive")
        if self.root_selection not in ("total", "average"):
            raise ValueError(f"unknown root_selection {self.root_selection!r}")


def _gap(x0, p_end, T):
    return p_end - (x0[:, 0] + x0[:, 1] * T + 0.5 * x0[:, 2] * T * T)


def beta_coefficients(x0, p_end, T):
    """Return ``(n_dims, 3)`` array of ``(β1, β2, β3)`` per dimension.

    The βs are the jerk polynomial ``u = β1 t²/2 + β2 t + β3`` that reaches
    ``p_end`` at ``T`` with vanishing velocity and acceleration costates.
    """
    x0 = check_state(x0)
    p_end = check_position(p_end, x0.shape[0])
    T = check_duration(T)
    gap = _gap(x0, p_end, T) / T**5
    return np.column_stack([20.0 * gap, -20.0 * T * gap, 10.0 * T * T * gap])


def primitive_trajectory(x0, p_end, T):
    """Quintic position polynomial of the primitive with duration ``T``."""
    x0 = check_state(x0)
    p_end = check_position(p_end, x0.shape[0])
    return _primitive(x0, p_end, check_duration(T))


def _primitive(x0, p_end, T):
    gap = _gap(x0, p_end, T) / T**5
    coeffs = np.empty((x0.shape[0], 6))
    coeffs[:, 0] = x0[:, 0]
    coeffs[:, 1] = x0[:, 1]
    coeffs[:, 2] = 0.5 * x0[:, 2]
    # β3/6, β2/24, β1/120 with β = (20, -20 T, 10 T²) Δ / T^5
    coeffs[:, 3] = (10.0 / 6.0) * T * T * gap
    coeffs[:, 4] = (-20.0 / 24.0) * T * gap
    coeffs[:, 5] = (20.0 / 120.0) * gap
    return QuinticTrajectory(coeffs, T)


def costates(betas, t):
    """Costates ``(λ_p, λ_v, λ_a)`` per dimension at time ``t``.

    From ``∂H/∂u = 0`` one gets ``λ_a = -2u``; the adjoint equations then
    give ``λ_v = 2(β1 t + β2)`` and a constant ``λ_p = -2 β1``.
    """
    b1, b2, b3 = betas[:, 0], betas[:, 1], betas[:, 2]
    return np.column_stack(
        [-2.0 * b1, 2.0 * (b1 * t + b2), -(b1 * t * t + 2.0 * b2 * t + 2.0 * b3)]
    )


def hamiltonian_residual(x0, p_end, T, t=None):
    """Normalized value of the Hamiltonian along the primitive of duration ``T``.

    Evaluated at ``t`` (default ``T``) and divided by the sum of magnitudes of
    its terms so that the result is scale free. Zero at an optimal duration.
    """
    x0 = check_state(x0)
    T = check_duration(T)
    t = T if t is None else float(t)
    betas = beta_coefficients(x0, p_end, T)
    traj = primitive_trajectory(x0, p_end, T)
    lam = costates(betas, t)
    u = 0.5 * betas[:, 0] * t * t + betas[:, 1] * t + betas[:, 2]
    # inside [0, T] so no end-hold clamping
    v = traj.velocity(t)
    a = traj.acceleration(t)
    terms = np.concatenate([u * u, lam[:, 0] * v, lam[:, 1] * a, lam[:, 2] * u, [1.0]])
    return abs(terms.sum()) / np.abs(terms).sum()


def duration_polynomial(x0, p_end):
    """Polynomial in ``T`` whose positive roots are stationary durations.

    ``dJ/dT`` with ``J(T) = Σ_d 20 Δ_d(T)² / T^5 + T`` multiplied by ``T^6``:
    ``T^6 - Σ_d [100 Δ_d² + 40 T Δ_d (v0_d + a0_d T)]``. This equals ``T^6``
    times the Hamiltonian, so its roots satisfy the free-time condition.
    All dimensions share the coefficients. Ascending coefficients, length 7.
    """
    x0 = check_state(x0)
    p_end = check_position(p_end, x0.shape[0])
    c = [0.0] * 7
    c[6] = 1.0
    for (p0, v0, a0), pe in zip(x0.tolist(), p_end.tolist()):
        g0, g1, g2 = pe - p0, -v0, -0.5 * a0
        # -100 Δ² - 40 T Δ (v0 + a0 T), Δ = g0 + g1 T + g2 T²
        c[0] -= 100.0 * g0 * g0
        c[1] -= 200.0 * g0 * g1 + 40.0 * g0 * v0
        c[2] -= 100.0 * (g1 * g1 + 2.0 * g0 * g2) + 40.0 * (g1 * v0 + g0 * a0)
        c[3] -= 200.0 * g1 * g2 + 40.0 * (g2 * v0 + g1 * a0)
        c[4] -= 100.0 * g2 * g2 + 40.0 * g2 * a0
    return np.array(c)


def constant_accel_duration(x0, p_end, v_ref=None, t_min=0.1):
    """Time to reach ``p_end`` under constant acceleration, max over dimensions.

    Dimensions whose quadratic ``p0 + v0 t + a0 t²/2 = p_end`` has no positive
    root use ``|p_end - p0| / v_ref`` instead. Returns ``t_min`` when every
    dimension is already at its goal.
    """
    x0 = check_state(x0)
    p_end = check_position(p_end, x0.shape[0])
    v_ref = 1.0 if v_ref is None else float(v_ref)
    best = 0.0
    for (p0, v0, a0), pe in zip(x0, p_end):
        gap = pe - p0
        if gap == 0.0:
            continue
        if a0 != 0.0:
            roots = np.roots([0.5 * a0, v0, -gap])
            roots = roots[np.abs(roots.imag) <= 1e-12].real
        elif v0 != 0.0:
            roots = np.array([gap / v0])
        else:
            roots = np.empty(0)
        roots = roots[roots > 0]
        t = roots.min() if roots.size else abs(gap) / v_ref
        best = max(best, t)
    return best if best > 0 else t_min


def jerk_cost(traj):
    """``∫_0^T ||jerk||² dt`` in closed form."""
    jerk = traj.derivative_coeffs(3)
    return sum(poly.integral_of_square(c, traj.duration) for c in jerk)


def average_cost(traj):
    """Time-averaged primitive cost ``(∫ ||u||² dt + T) / T``."""
    T = check_duration(traj.duration)
    return (jerk_cost(traj) + T) / T


def total_cost(traj):
    """Primitive objective ``∫_0^T (||u||² + 1) dt``."""
    return jerk_cost(traj) + traj.duration


def solve_min_time(x0, p_end, opts=None, return_info=False):
    """Minimum-time jerk-smooth trajectory from ``x0`` to ``p_end``.

    Candidate durations are the real roots of :func:`duration_polynomial`
    inside ``[t_min, t_max]``. Without any admissible root the durations are
    drawn evenly from a band of ``±sample_spread`` around the constant
    acceleration estimate and the lowest average cost wins. Ties go to the
    shorter duration.

    With ``return_info`` a second value, ``"root"`` or ``"sampled"``, tells
    which branch produced the result.
    """
    opts = PrimitiveOptions() if opts is None else opts
    x0 = check_state(x0)
    p_end = check_position(p_end, x0.shape[0])

    roots = poly.real_roots(duration_polynomial(x0, p_end))
    roots = np.unique(roots[(roots >= opts.t_min) & (roots <= opts.t_max)])
    score = total_cost if opts.root_selection == "total" else average_cost
    branch = "root"
    if roots.size:
        candidates = roots
    else:
        branch = "sampled"
        score = average_cost
        t_ref = constant_accel_duration(x0, p_end, opts.v_ref, opts.t_min)
        lo = max(opts.t_min, (1.0 - opts.sample_spread) * t_ref)
        hi = min(opts.t_max, (1.0 + opts.sample_spread) * t_ref)
        if hi < lo:
            lo = hi = min(max(t_ref, opts.t_min), opts.t_max)
        candidates = np.linspace(lo, hi, opts.sample_count)

    # closed form of the jerk integral along the primitive: 20 Δ² / T^5
    Ts = np.asarray(candidates, dtype=float)
    gaps = p_end[None, :] - (x0[:, 0] + np.outer(Ts, x0[:, 1]) + 0.5 * np.outer(Ts * Ts, x0[:, 2]))
    costs = 20.0 * np.sum(gaps * gaps, axis=1) / Ts**5 + Ts
    if score is average_cost:
        costs = costs / Ts
    # argmin returns the first minimum, i.e. the shortest duration on ties
    best = _primitive(x0, p_end, float(Ts[np.argmin(costs)]))
    return (best, branch) if return_info else best


class JerkSmoothPrimitive(BaseEstimator):
    """Estimator wrapper around :func:`solve_min_time`.

    ``fit(x0, p_end)`` solves for the trajectory; ``predict(t)`` returns the
    states at times ``t`` as an array of shape ``(len(t), n_dims, 3)``.

    Attributes
    ----------
    trajectory_ : QuinticTrajectory
    duration_ : float
    branch_ : str
        ``"root"`` or ``"sampled"``.
    """

    def __init__(self, t_min=0.1, t_max=60.0, sample_count=64, sample_spread=0.5,
                 v_ref=None, root_selection="total"):
        self.t_min = t_min
        self.t_max = t_max
        self.sample_count = sample_count
        self.sample_spread = sample_spread
        self.v_ref = v_ref
        self.root_selection = root_selection

    def _options(self):
        return PrimitiveOptions(self.t_min, self.t_max, self.sample_count,
                                self.sample_spread, self.v_ref, self.root_selection)

    def fit(self, x0, p_end):
        traj, branch = solve_min_time(x0, p_end, self._options(), return_info=True)
        self.trajectory_ = traj
        self.duration_ = traj.duration
        self.branch_ = branch
        return self

    def predict(self, t):
        check_is_fitted(self, "trajectory_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([self.trajectory_.state(ti) for ti in t])

    def score(self, x0=None, p_end=None):
        """Negative average cost of the fitted trajectory (higher is better)."""
        check_is_fitted(self, "trajectory_")
        return -average_cost(self.trajectory_)
