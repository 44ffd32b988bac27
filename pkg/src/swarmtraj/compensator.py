"""Least-squares trajectory compensator for predicted peer trajectories.

A peer's primitive prediction ignores interactions with other robots. The
compensator is a per-dimension quintic fitted to the recent history of
``observed - predicted`` state residuals, subject to vanishing at the
current time ``t = 0`` and at the prediction's end ``t = T``. The
equality-constrained least-squares problem is solved through its KKT system.

History samples live at non-positive local times: sample ``i`` of ``K``
sits at ``-(K - 1 - i) * dt`` so the newest one is at ``t = 0``.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator

from .errors import DurationMismatch, NonMonotoneTimestamp
from .trajectory import QuinticTrajectory
from .validation import check_duration, check_is_fitted, check_state

DEFAULT_STATE_WEIGHTS = (1.0, 0.1, 0.01)


@dataclass(frozen=True)
class Sample:
    time: float
    observed: np.ndarray
    predicted: np.ndarray


class HorizonBuffer:
    """Fixed-capacity history of (time, observed state, predicted state)."""

    def __init__(self, capacity=10):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._samples = deque(maxlen=self.capacity)

    def __len__(self):
        return len(self._samples)

    def __iter__(self):
        return iter(self._samples)

    @property
    def times(self):
        return np.array([s.time for s in self._samples])

    def residuals(self):
        """``observed - predicted`` stacked to ``(len, n_dims, 3)``."""
        return np.array([s.observed - s.predicted for s in self._samples])

    def push(self, observed, predicted, ts):
        """Append a sample, evicting the oldest when full. Returns ``self``."""
        observed = check_state(observed, name="observed")
        predicted = check_state(predicted, observed.shape[0], name="predicted")
        if self._samples and ts <= self._samples[-1].time:
            raise NonMonotoneTimestamp(
                f"timestamp {ts} does not follow {self._samples[-1].time}"
            )
        self._samples.append(Sample(float(ts), observed, predicted))
        return self


def push_observation(buf, observed, predicted, ts):
    return buf.push(observed, predicted, ts)


@dataclass(frozen=True)
class CompensatorPoly:
    """Per-dimension compensator quintic (ascending coefficients)."""

    coeffs: np.ndarray
    duration: float
    singular: bool = False

    def as_trajectory(self):
        return QuinticTrajectory(self.coeffs, self.duration)

    @classmethod
    def zero(cls, n_dims, duration, singular=False):
        return cls(np.zeros((n_dims, 6)), float(duration), singular)


def _basis(s, order):
    """Rows of d^order/ds^order [1, s, ..., s^5] at points ``s``."""
    s = np.atleast_1d(s)
    rows = np.zeros((s.size, 6))
    for k in range(order, 6):
        fac = 1.0
        for j in range(order):
            fac *= k - j
        rows[:, k] = fac * s ** (k - order)
    return rows


def kkt_system(times, residuals, T, state_weights=DEFAULT_STATE_WEIGHTS,
               start_orders=1, end_orders=3):
    """Assemble the per-dimension KKT matrices in normalized time ``s = t / T``.

    Returns ``(kkt, rhs, design, weights, constraints)`` where ``kkt`` has
    shape ``(6 + m, 6 + m)`` and ``rhs`` has shape ``(n_dims, 6 + m)``.
    The primal unknowns are the coefficients ``c_k T^k`` of ``s^k``.
    """
    s = np.asarray(times, dtype=float) / T
    w = np.asarray(state_weights, dtype=float)
    blocks = [_basis(s, order) / T**order for order in range(3)]
    design = np.vstack(blocks)
    weights = np.repeat(w, s.size)
    cons = [_basis(0.0, order) / T**order for order in range(start_orders)]
    cons += [_basis(1.0, order) / T**order for order in range(end_orders)]
    constraints = np.vstack(cons) if cons else np.zeros((0, 6))
    m = constraints.shape[0]

    normal = 2.0 * design.T @ (weights[:, None] * design)
    kkt = np.zeros((6 + m, 6 + m))
    kkt[:6, :6] = normal
    kkt[:6, 6:] = constraints.T
    kkt[6:, :6] = constraints
    # residuals: (K, n_dims, 3) -> targets per dim ordered (pos..., vel..., acc...)
    r = np.asarray(residuals, dtype=float)
    targets = np.concatenate([r[:, :, o].T for o in range(3)], axis=1)
    rhs = np.zeros((r.shape[1], 6 + m))
    rhs[:, :6] = 2.0 * (targets * weights) @ design
    return kkt, rhs, design, weights, constraints


def fit_compensator(buf, T, dt=None, state_weights=DEFAULT_STATE_WEIGHTS,
                    start_orders=1, end_orders=3):
    """Fit the compensator quintic to the residual history in ``buf``.

    ``dt`` is the nominal sample spacing used to place samples on the local
    time axis; by default the buffer timestamps themselves are used, shifted
    so that the newest sample is at ``t = 0``. ``start_orders`` and
    ``end_orders`` choose how many state components (position, velocity,
    acceleration) must vanish at ``0`` and ``T``.

    A rank-deficient KKT matrix yields a zero compensator with
    ``singular=True``.
    """
    T = check_duration(T)
    if len(buf) < 2:
        raise ValueError("need at least 2 samples to fit a compensator")
    if not 0 <= start_orders <= 3 or not 0 <= end_orders <= 3:
        raise ValueError("constraint orders must lie in 0..3")
    times = buf.times
    if dt is None:
        times = times - times[-1]
    else:
        times = -dt * np.arange(len(buf) - 1, -1, -1, dtype=float)
    residuals = buf.residuals()
    n_dims = residuals.shape[1]
    kkt, rhs, *_ = kkt_system(times, residuals, T, state_weights, start_orders, end_orders)

    # sysv (Bunch-Kaufman LDL^T); ill-conditioning surfaces as LinAlgWarning
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            sol = scipy.linalg.solve(kkt, rhs.T, assume_a="sym", check_finite=False)
        except (scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            return CompensatorPoly.zero(n_dims, T, singular=True)
    coeffs = sol[:6].T / T ** np.arange(6)
    return CompensatorPoly(coeffs, T)


def compose_prediction(pred, comp):
    """Compensated prediction ``x_pred + x_cmp`` as a single quintic.

    Beyond its duration the result holds the terminal position.
    """
    if not np.isclose(pred.duration, comp.duration, rtol=1e-12, atol=0.0):
        raise DurationMismatch(
            f"prediction lasts {pred.duration} s, compensator {comp.duration} s"
        )
    return QuinticTrajectory(pred.coeffs + comp.coeffs, pred.duration)


class TrajectoryCompensator(BaseEstimator):
    """Estimator form of :func:`fit_compensator`.

    ``fit(times, residuals, T)`` takes sample times (any origin; the latest
    becomes ``t = 0``) and residuals of shape ``(K, n_dims, 3)``.
    ``predict(t)`` returns the compensator states ``(len(t), n_dims, 3)``.
    """

    def __init__(self, state_weights=DEFAULT_STATE_WEIGHTS, start_orders=1,
                 end_orders=3):
        self.state_weights = state_weights
        self.start_orders = start_orders
        self.end_orders = end_orders

    def fit(self, times, residuals, T):
        residuals = np.asarray(residuals, dtype=float)
        times = np.asarray(times, dtype=float)
        if residuals.ndim != 3 or residuals.shape[0] != times.size:
            raise ValueError("residuals must have shape (len(times), n_dims, 3)")
        buf = HorizonBuffer(capacity=max(times.size, 1))
        zero = np.zeros(residuals.shape[1:])
        for t, r in zip(times, residuals):
            buf.push(r, zero, t)
        self.compensator_ = fit_compensator(
            buf, T, state_weights=self.state_weights,
            start_orders=self.start_orders, end_orders=self.end_orders,
        )
        self.coef_ = self.compensator_.coeffs
        return self

    def predict(self, t):
        check_is_fitted(self, "compensator_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        traj = QuinticTrajectory(self.coef_, self.compensator_.duration)
        # evaluate the raw polynomial (negative local times included)
        out = np.empty((t.size, traj.n_dims, 3))
        for order in range(3):
            c = traj.derivative_coeffs(order)
            out[:, :, order] = np.stack(
                [np.polynomial.polynomial.polyval(t, ci) for ci in c], axis=-1
            )
        return out
