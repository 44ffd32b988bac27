import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from swarmtraj import QuinticTrajectory
from swarmtraj.compensator import (
    HorizonBuffer, TrajectoryCompensator, compose_prediction, fit_compensator,
    kkt_system, push_observation,
)
from swarmtraj.errors import DurationMismatch, NonMonotoneTimestamp

P = np.polynomial.polynomial


def states_of(coeffs, t):
    """(len(t), n_dims, 3) position/velocity/acceleration of raw polynomials."""
    out = np.empty((len(t), coeffs.shape[0], 3))
    for d, c in enumerate(coeffs):
        for o in range(3):
            out[:, d, o] = P.polyval(t, P.polyder(c, o) if o else c)
    return out


def filled(residuals, dt=0.1):
    buf = HorizonBuffer(len(residuals))
    zero = np.zeros(residuals.shape[1:])
    for i, r in enumerate(residuals):
        buf.push(r, zero, i * dt)
    return buf


def weighted_misfit(coeffs, times, residuals, w=(1.0, 0.1, 0.01)):
    diff = states_of(coeffs, times) - residuals
    return float(np.sum(np.asarray(w) * diff**2))


def test_buffer_push_and_evict():
    buf = HorizonBuffer(3)
    x = np.zeros((2, 3))
    for k in range(5):
        push_observation(buf, x + k, x, float(k))
    assert len(buf) == 3
    np.testing.assert_array_equal(buf.times, [2, 3, 4])
    np.testing.assert_array_equal(buf.residuals()[:, 0, 0], [2, 3, 4])
    with pytest.raises(NonMonotoneTimestamp):
        buf.push(x, x, 4.0)
    with pytest.raises(ValueError):
        HorizonBuffer(0)


def test_zero_residuals_give_zero_compensator():
    buf = filled(np.zeros((6, 3, 3)))
    comp = fit_compensator(buf, 2.0)
    assert not comp.singular
    assert np.all(comp.coeffs == 0)


def test_recovers_admissible_quintic(rng):
    T = 2.0
    # t (t - T)^3 (a + b t): zero at 0, flat to second order at T
    base = P.polymul([0, 1], P.polypow([-T, 1], 3))
    coeffs = np.array([P.polymul(base, rng.normal(size=2)) for _ in range(3)])
    times = -0.1 * np.arange(9, -1, -1)
    buf = filled(states_of(coeffs, times))
    comp = fit_compensator(buf, T, dt=0.1)
    np.testing.assert_allclose(comp.coeffs, coeffs, atol=1e-9)


@pytest.mark.parametrize("seed", range(100))
def test_constraints_hold(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 15))
    T = rng.uniform(0.3, 6.0)
    res = rng.normal(size=(K, 3, 3))
    comp = fit_compensator(filled(res), T, dt=0.1)
    assert not comp.singular
    s0 = states_of(comp.coeffs, [0.0])[0]
    sT = states_of(comp.coeffs, [T])[0]
    assert np.max(np.abs(s0[:, 0])) < 1e-9
    assert np.max(np.abs(sT)) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_kkt_solution_is_constrained_minimum(seed):
    rng = np.random.default_rng(seed)
    K, T, dt = 8, rng.uniform(0.5, 4.0), 0.1
    res = rng.normal(size=(K, 2, 3))
    times = -dt * np.arange(K - 1, -1, -1)
    comp = fit_compensator(filled(res), T, dt=dt)

    # independent oracle: null-space parametrization + weighted lstsq in raw t
    _, _, design, weights, cons = kkt_system(times, res, T)
    scale = T ** np.arange(6)
    design, cons = design * scale, cons * scale
    null = scipy.linalg.null_space(cons)
    sw = np.sqrt(weights)[:, None]
    for d in range(2):
        target = np.concatenate([res[:, d, o] for o in range(3)])
        z, *_ = np.linalg.lstsq(sw * design @ null, sw[:, 0] * target, rcond=None)
        np.testing.assert_allclose(comp.coeffs[d], null @ z, rtol=1e-6, atol=1e-8)

    # stationarity of the Lagrangian
    kkt, rhs, *_ = kkt_system(times, res, T)
    x = np.linalg.solve(kkt, rhs.T)
    assert np.max(np.abs(kkt @ x - rhs.T)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.floats(0.3, 5.0))
def test_fit_no_worse_than_zero(seed, K, T):
    rng = np.random.default_rng(seed)
    res = rng.normal(size=(K, 3, 3))
    times = -0.1 * np.arange(K - 1, -1, -1)
    comp = fit_compensator(filled(res), T, dt=0.1)
    zero = weighted_misfit(np.zeros((3, 6)), times, res)
    assert weighted_misfit(comp.coeffs, times, res) <= zero * (1 + 1e-9)


def test_deterministic(rng):
    res = rng.normal(size=(7, 3, 3))
    a = fit_compensator(filled(res), 1.5).coeffs
    b = fit_compensator(filled(res), 1.5).coeffs
    np.testing.assert_array_equal(a, b)


def test_fit_rejects_bad_input():
    buf = filled(np.zeros((1, 3, 3)))
    with pytest.raises(ValueError):
        fit_compensator(buf, 1.0)
    with pytest.raises(ValueError):
        fit_compensator(filled(np.zeros((3, 3, 3))), 1.0, end_orders=4)


def test_compose_prediction(rng):
    pred = QuinticTrajectory(rng.normal(size=(3, 6)), 2.0)
    comp = fit_compensator(filled(rng.normal(size=(5, 3, 3))), 2.0)
    out = compose_prediction(pred, comp)
    np.testing.assert_allclose(out.position(0.7), pred.position(0.7) + comp.as_trajectory().position(0.7))
    # compensator vanishes at the end, so the endpoint is the prediction's
    np.testing.assert_allclose(out.state(2.0), pred.state(2.0), atol=1e-9)
    with pytest.raises(DurationMismatch):
        compose_prediction(QuinticTrajectory(pred.coeffs, 2.5), comp)


def test_estimator(rng):
    est = TrajectoryCompensator()
    with pytest.raises(NotFittedError):
        est.predict([0.0])
    times = np.arange(6) * 0.1
    res = rng.normal(size=(6, 2, 3))
    est.fit(times, res, 1.2)
    ref = fit_compensator(filled(res), 1.2)
    np.testing.assert_allclose(est.coef_, ref.coeffs)
    out = est.predict([0.0, 1.2])
    assert out.shape == (2, 2, 3)
    np.testing.assert_allclose(out[0, :, 0], 0, atol=1e-9)
    np.testing.assert_allclose(out[1], 0, atol=1e-9)
    with pytest.raises(ValueError):
        est.fit(times, res[:3], 1.0)
