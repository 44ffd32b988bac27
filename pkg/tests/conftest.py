"""Shared oracles and fixtures."""

import functools

import numpy as np
import pytest
from scipy.optimize import brentq

from swarmtraj.optimizer import Limits, RobotShape

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def _nodes(n):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(f, a, b, n=64):
    """``∫_a^b f`` with an ``n``-point Gauss-Legendre rule; ``f`` is vectorized."""
    if b <= a:
        return 0.0
    x, w = _nodes(n)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * float(w @ f(t))


def sign_changes(g, a, b, n=4000):
    """Roots of ``g`` in ``(a, b)`` from sign changes on a grid, refined by brentq."""
    t = np.linspace(a, b, n + 1)
    v = g(t)
    roots = list(t[1:-1][v[1:-1] == 0.0])
    for i in np.nonzero(v[:-1] * v[1:] < 0)[0]:
        roots.append(brentq(g, t[i], t[i + 1], xtol=1e-14, rtol=1e-15))
    return sorted(roots)


def piecewise_gl(f, breaks, n=256):
    """Gauss-Legendre over consecutive pieces of sorted ``breaks``."""
    return sum(gauss_legendre(f, a, b, n) for a, b in zip(breaks[:-1], breaks[1:]))


def random_state(rng, n_dims=3, scale=(3.0, 1.0, 0.5)):
    return np.column_stack([rng.uniform(-s, s, n_dims) for s in scale])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def firefly():
    return RobotShape(0.5, 3.0), Limits(2.0, 8.0, 20.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
