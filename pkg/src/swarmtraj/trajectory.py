"""Per-dimension quintic trajectories with a shared duration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import poly


@dataclass(frozen=True)
class QuinticTrajectory:
    """Position polynomials ``p_i(t) = sum_k coeffs[i, k] * t**k`` on ``[0, duration]``.

    Beyond ``duration`` the trajectory holds its terminal position with zero
    velocity and acceleration. A ``duration`` of zero describes a robot that
    simply stays where it is.
    """

    coeffs: np.ndarray
    duration: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 2:
            raise ValueError(f"coeffs must be 2-D (n_dims, n_coeffs), got {c.shape}")
        if c.shape[1] < 6:
            c = np.pad(c, ((0, 0), (0, 6 - c.shape[1])))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "duration", float(self.duration))
        if self.duration < 0 or not np.isfinite(self.duration):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration}")

    @property
    def n_dims(self):
        return self.coeffs.shape[0]

    @classmethod
    def hold(cls, position):
        """Stationary trajectory at ``position``."""
        p = np.asarray(position, dtype=float).reshape(-1, 1)
        return cls(np.hstack([p, np.zeros((p.shape[0], 5))]), 0.0)

    def derivative_coeffs(self, order):
        return poly.derivative(self.coeffs, order)

    def _eval(self, order, t):
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, self.duration)
        c = self.derivative_coeffs(order)
        vals = np.stack([poly.polyeval(ci, inside) for ci in c], axis=-1)
        if order > 0:
            vals = np.where((t > self.duration)[..., None], 0.0, vals)
        return vals

    def position(self, t):
        """Positions at ``t``; shape ``t.shape + (n_dims,)``."""
        return self._eval(0, t)

    def velocity(self, t):
        return self._eval(1, t)

    def acceleration(self, t):
        return self._eval(2, t)

    def jerk(self, t):
        return self._eval(3, t)

    def state(self, t):
        """State ``(n_dims, 3)`` at scalar time ``t``."""
        return np.stack(
            [self.position(t), self.velocity(t), self.acceleration(t)], axis=-1
        )

    def shifted(self, tau):
        """Trajectory re-timed so that ``t = 0`` corresponds to ``tau`` now."""
        if tau <= 0:
            return self
        if tau >= self.duration:
            return QuinticTrajectory.hold(self.position(self.duration))
        return QuinticTrajectory(poly.taylor_shift(self.coeffs, tau), self.duration - tau)

    def __add__(self, other):
        if not isinstance(other, QuinticTrajectory):
            return NotImplemented
        return QuinticTrajectory(self.coeffs + other.coeffs, self.duration)
