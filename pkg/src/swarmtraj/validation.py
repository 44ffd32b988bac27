"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np

from .errors import NonPositiveDuration


def check_state(x, n_dims=None, name="state"):
    """Return ``x`` as a finite float array of shape ``(n_dims, 3)``.

    Rows are dimensions; columns are position, velocity and acceleration.
    A 1-D input of length ``3 * n`` is accepted in interleaved order
    ``[p1, v1, a1, p2, ...]``.
    """
    x = np.array(x, dtype=float)
    if x.ndim == 1:
        if x.size % 3:
            raise ValueError(f"{name} of length {x.size} is not a multiple of 3")
        x = x.reshape(-1, 3)
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n_dims, 3), got {x.shape}")
    if n_dims is not None and x.shape[0] != n_dims:
        raise ValueError(f"{name} has {x.shape[0]} dimensions, expected {n_dims}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def check_position(p, n_dims=None, name="position"):
    p = np.array(p, dtype=float).reshape(-1)
    if n_dims is not None and p.size != n_dims:
        raise ValueError(f"{name} has {p.size} dimensions, expected {n_dims}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} contains non-finite entries")
    return p


def check_duration(T, name="T"):
    if not isinstance(T, numbers.Real) or not np.isfinite(T) or T <= 0:
        raise NonPositiveDuration(f"{name} must be a positive finite duration, got {T!r}")
    return float(T)


def check_nonnegative(value, name):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {value}")
    return value


def check_is_fitted(estimator, attribute):
    from sklearn.exceptions import NotFittedError

    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )
