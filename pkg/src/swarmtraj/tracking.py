"""Online estimate of trajectory-tracking error.

The tracking error ``ξ`` is the weighted root mean square of
``planned - observed`` state differences over a moving window, and is used
to pad each robot's collision ellipsoid.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_is_fitted, check_state

DEFAULT_WEIGHTS = (1.0, 0.1, 0.01)


def weight_matrix(n_dims, weights=DEFAULT_WEIGHTS):
    """Diagonal weights shaped like a state, ``(n_dims, 3)``."""
    w = np.asarray(weights, dtype=float)
    if w.shape == (3,):
        w = np.tile(w, (n_dims, 1))
    if w.shape != (n_dims, 3):
        raise ValueError(f"weights must have shape (3,) or ({n_dims}, 3), got {w.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    return w


class TrackingHistory:
    """Moving window of (planned, observed) states."""

    def __init__(self, capacity=20, weights=DEFAULT_WEIGHTS, prior=0.0, clamp=None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.weights = weights
        self.prior = float(prior)
        self.clamp = clamp
        self._diffs = deque(maxlen=self.capacity)

    def __len__(self):
        return len(self._diffs)

    def update(self, planned, observed):
        planned = check_state(planned, name="planned")
        observed = check_state(observed, planned.shape[0], name="observed")
        self._diffs.append(planned - observed)
        return self

    def residuals(self):
        return np.array(self._diffs)

    def error(self):
        return tracking_error(self)


def update(h, planned, observed):
    return h.update(planned, observed)


def tracking_error(h):
    """Weighted RMS of the stored residuals.

    Divides by the number of stored samples, so a partly filled window gives
    an unbiased early estimate. An empty history returns ``h.prior``. The
    result is clipped to ``[0, h.clamp]`` when a clamp is set.
    """
    if len(h) == 0:
        xi = h.prior
    else:
        r = h.residuals()
        w = weight_matrix(r.shape[1], h.weights)
        xi = float(np.sqrt(np.sum(w * r * r) / r.shape[0]))
    if h.clamp is not None:
        xi = min(xi, float(h.clamp))
    return max(xi, 0.0)


class TrackingErrorEstimator(BaseEstimator):
    """Estimator form of the tracking error.

    ``fit(planned, observed)`` takes two arrays of shape ``(K, n_dims, 3)``
    and keeps the last ``horizon`` pairs; ``partial_fit`` appends more.
    The estimate is available as ``xi_``.
    """

    def __init__(self, horizon=20, weights=DEFAULT_WEIGHTS, prior=0.0, clamp=None):
        self.horizon = horizon
        self.weights = weights
        self.prior = prior
        self.clamp = clamp

    def fit(self, planned, observed):
        self.history_ = TrackingHistory(self.horizon, self.weights, self.prior, self.clamp)
        return self.partial_fit(planned, observed)

    def partial_fit(self, planned, observed):
        if getattr(self, "history_", None) is None:
            self.history_ = TrackingHistory(self.horizon, self.weights, self.prior, self.clamp)
        planned = np.asarray(planned, dtype=float)
        observed = np.asarray(observed, dtype=float)
        if planned.ndim == 2:
            planned, observed = planned[None], observed[None]
        for p, o in zip(planned, observed):
            self.history_.update(p, o)
        self.xi_ = tracking_error(self.history_)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "history_")
        return self.xi_
