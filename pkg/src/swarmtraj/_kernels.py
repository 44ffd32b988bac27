"""Compiled inner loops for the condensed planner cost.

Everything here works on plain float arrays of ascending polynomial
coefficients. The public wrappers live in :mod:`swarmtraj.optimizer`.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EXP_CLAMP = 50.0
CULL_EXPONENT = 30.0
SCREEN_SAMPLES = 24


@njit(cache=True)
def horner(c, n, t):
    acc = 0.0
    for k in range(n - 1, -1, -1):
        acc = acc * t + c[k]
    return acc


@njit(cache=True)
def _bracketed_root(p, dp, n, lo, hi, flo):
    """Root of ``p`` in ``[lo, hi]`` given a sign change; Newton with bisection guard."""
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx = horner(p, n, x)
        if fx == 0.0:
            return x
        if (fx < 0.0) == (flo < 0.0):
            lo, flo = x, fx
        else:
            hi = x
        d = horner(dp, n - 1, x)
        xn = x - fx / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * max(1.0, abs(x)) or hi - lo <= 4e-16 * max(1.0, abs(hi)):
            return xn
        x = xn
    return x


@njit(cache=True)
def interval_roots(c, n, a, b, out):
    """Sign-changing roots of ``c[:n]`` strictly inside ``(a, b)``, sorted into ``out``.

    Works up the derivative chain: the roots of each derivative split the
    interval into monotone pieces of the next lower one, and every piece with
    a sign change holds exactly one root. Returns the number of roots.
    """
    while n > 1 and c[n - 1] == 0.0:
        n -= 1
    if n <= 1:
        return 0
    D = np.zeros((n, n))
    for j in range(n):
        D[0, j] = c[j]
    for k in range(1, n):
        for j in range(n - k):
            D[k, j] = D[k - 1, j + 1] * (j + 1)
    roots = np.empty(n)
    tmp = np.empty(n)
    m = 0
    c0, c1 = D[n - 2, 0], D[n - 2, 1]
    if c1 != 0.0:
        r = -c0 / c1
        if a < r < b:
            roots[0] = r
            m = 1
    for k in range(n - 3, -1, -1):
        L = n - k
        new = 0
        xl = a
        fl = horner(D[k], L, a)
        for i in range(m + 1):
            xr = roots[i] if i < m else b
            fr = horner(D[k], L, xr)
            if (fl < 0.0 and fr > 0.0) or (fl > 0.0 and fr < 0.0):
                tmp[new] = _bracketed_root(D[k], D[k + 1], L, xl, xr, fl)
                new += 1
            xl, fl = xr, fr
        for i in range(new):
            roots[i] = tmp[i]
        m = new
    for i in range(m):
        out[i] = roots[i]
    return m


@njit(cache=True)
def collision_potential(d, k_p):
    """Antiderivative of ``exp(min(-k_p (d - 1), EXP_CLAMP))`` in ``d``."""
    if k_p == 0.0:
        return d
    d_star = 1.0 - EXP_CLAMP / k_p
    if d < d_star:
        return -math.exp(EXP_CLAMP) / k_p + math.exp(EXP_CLAMP) * (d - d_star)
    return -math.exp(-k_p * (d - 1.0)) / k_p


@njit(cache=True)
def limit_potential(g, tau_sq, k_p):
    """Antiderivative of ``exp(min(k_p (g - τ²), EXP_CLAMP))`` in ``g``."""
    if k_p == 0.0:
        return g
    g_star = tau_sq + EXP_CLAMP / k_p
    if g > g_star:
        return math.exp(EXP_CLAMP) / k_p + math.exp(EXP_CLAMP) * (g - g_star)
    return math.exp(k_p * (g - tau_sq)) / k_p


@njit(cache=True)
def _potential(kind, v, param, k_p):
    if kind == 0:
        return collision_potential(v, k_p)
    return limit_potential(v, param, k_p)


@njit(cache=True)
def variation(g, n, a, b, kind, param, k_p, signed):
    """``Σ |Φ(g(t_{i+1})) - Φ(g(t_i))|`` over the monotone pieces of ``g`` on ``[a, b]``.

    ``kind`` 0 is the collision potential, 1 the limit potential with
    ``param = τ²``. ``signed`` returns ``Φ(g(b)) - Φ(g(a))`` instead.
    """
    if not b > a:
        return 0.0
    if signed:
        return _potential(kind, horner(g, n, b), param, k_p) - _potential(
            kind, horner(g, n, a), param, k_p)
    dg = np.empty(max(n - 1, 1))
    for j in range(n - 1):
        dg[j] = g[j + 1] * (j + 1)
    pts = np.empty(n + 1)
    m = interval_roots(dg, n - 1, a, b, pts) if n > 1 else 0
    total = 0.0
    prev = _potential(kind, horner(g, n, a), param, k_p)
    for i in range(m + 1):
        x = pts[i] if i < m else b
        cur = _potential(kind, horner(g, n, x), param, k_p)
        total += abs(cur - prev)
        prev = cur
    return total


@njit(cache=True)
def condensed_coeffs(x0, xe, T, out):
    """Quintic through ``x0`` at 0 and ``xe`` at ``T``, written into ``out`` (N, 6)."""
    T2 = T * T
    for i in range(x0.shape[0]):
        p0, v0, a0 = x0[i, 0], x0[i, 1], x0[i, 2]
        gp = (xe[i, 0] - (p0 + v0 * T + 0.5 * a0 * T2)) / (T2 * T)
        gv = (xe[i, 1] - (v0 + a0 * T)) / T2
        ga = (xe[i, 2] - a0) / T
        out[i, 0] = p0
        out[i, 1] = v0
        out[i, 2] = 0.5 * a0
        out[i, 3] = 10.0 * gp - 4.0 * gv + 0.5 * ga
        out[i, 4] = (-15.0 * gp + 7.0 * gv - ga) / T
        out[i, 5] = (6.0 * gp - 3.0 * gv + 0.5 * ga) / T2


@njit(cache=True)
def jerk_energy(c, T):
    """``∫_0^T ||jerk||² dt`` of quintic rows ``c`` (N, 6)."""
    T2 = T * T
    total = 0.0
    for i in range(c.shape[0]):
        j0, j1, j2 = 6.0 * c[i, 3], 24.0 * c[i, 4], 60.0 * c[i, 5]
        total += (j0 * j0 * T + j0 * j1 * T2 + (j1 * j1 + 2.0 * j0 * j2) * T2 * T / 3.0
                  + 0.5 * j1 * j2 * T2 * T2 + j2 * j2 * T2 * T2 * T / 5.0)
    return total


@njit(cache=True)
def _norm_sq_poly(c, order, out):
    """``Σ_i (d^order c_i)²`` as a polynomial; returns its length."""
    m = 6 - order
    for k in range(2 * m - 1):
        out[k] = 0.0
    for i in range(c.shape[0]):
        for j in range(m):
            fj = 1.0
            for r in range(order):
                fj *= j + order - r
            aj = fj * c[i, j + order]
            for k in range(m):
                fk = 1.0
                for r in range(order):
                    fk *= k + order - r
                out[j + k] += aj * fk * c[i, k + order]
    return 2 * m - 1


@njit(cache=True)
def limits_integral(c, T, taus_sq, k_p, signed, screen):
    """Unweighted limit barrier over velocity, acceleration and jerk norms.

    With ``screen`` a derivative is skipped when sampled ``g`` plus a
    Lipschitz slack stays below ``τ² - 30 / k_p`` (barrier under ``e^-30``).
    """
    g = np.empty(9)
    total = 0.0
    for order in range(1, 4):
        n = _norm_sq_poly(c, order, g)
        tau_sq = taus_sq[order - 1]
        if screen and k_p > 0.0:
            g_max = -np.inf
            for s in range(17):
                v = horner(g, n, T * s / 16.0)
                if v > g_max:
                    g_max = v
            slope = 0.0
            tk = 1.0
            for k in range(1, n):
                slope += abs(g[k]) * k * tk
                tk *= T
            if g_max + 0.5 * T / 16.0 * slope < tau_sq - CULL_EXPONENT / k_p:
                continue
        total += variation(g, n, 0.0, T, 1, tau_sq, k_p, signed)
    return total


@njit(cache=True)
def _pair_poly(own, other, inv_r2, out):
    """``Σ_i inv_r2_i (own_i - other_i)²`` as a polynomial of length 11."""
    for k in range(11):
        out[k] = 0.0
    diff = np.empty(6)
    for i in range(own.shape[0]):
        for k in range(6):
            diff[k] = own[i, k] - other[i, k]
        w = inv_r2[i]
        for j in range(6):
            if diff[j] == 0.0:
                continue
            for k in range(6):
                out[j + k] += w * diff[j] * diff[k]


@njit(cache=True)
def _eval_rows(c, t):
    """Positions ``(len(t), N)`` of quintic rows ``c`` at times ``t``."""
    out = np.empty((t.size, c.shape[0]))
    for s in range(t.size):
        for i in range(c.shape[0]):
            out[s, i] = horner(c[i], 6, t[s])
    return out


@njit(cache=True)
def _speed(c, t):
    v2 = 0.0
    for i in range(c.shape[0]):
        v = c[i, 1] + t * (2.0 * c[i, 2] + t * (3.0 * c[i, 3] + t * (4.0 * c[i, 4] + t * 5.0 * c[i, 5])))
        v2 += v * v
    return math.sqrt(v2)


@njit(cache=True)
def collision_terms(own, t_end, pc, pdur, pheld, inv_r2, rmin, k_p, signed, screen, out):
    """Unweighted collision barrier against each peer, written into ``out`` (P,).

    Peers hold their end position ``pheld`` after ``pdur``. With ``screen``
    a peer is skipped when sampled scaled separation minus a relative-speed
    slack stays beyond the point where the barrier is under ``e^-30``.
    """
    P = pc.shape[0]
    for p in range(P):
        out[p] = 0.0
    if t_end <= 0.0:
        return
    cutoff = math.sqrt(1.0 + CULL_EXPONENT / max(k_p, 1e-12))
    ns = SCREEN_SAMPLES
    h = t_end / (ns - 1)
    ts = np.empty(ns)
    for s in range(ns):
        ts[s] = s * h
    own_p = _eval_rows(own, ts)
    own_v = 0.0
    if screen:
        for s in range(ns):
            sp = _speed(own, ts[s])
            if sp > own_v:
                own_v = sp
    dpoly = np.empty(11)
    N = own.shape[0]
    for p in range(P):
        if screen:
            dmin = np.inf
            peer_v = 0.0
            for s in range(ns):
                tc = min(ts[s], pdur[p])
                d = 0.0
                for i in range(N):
                    e = own_p[s, i] - horner(pc[p, i], 6, tc)
                    d += e * e * inv_r2[p, i]
                if d < dmin:
                    dmin = d
                if ts[s] <= pdur[p]:
                    sp = _speed(pc[p], tc)
                    if sp > peer_v:
                        peer_v = sp
            slack = 2.0 * h * (own_v + peer_v) / rmin[p]
            if math.sqrt(dmin) - slack >= cutoff:
                continue
        t_split = min(pdur[p], t_end)
        val = 0.0
        if t_split > 0.0:
            _pair_poly(own, pc[p], inv_r2[p], dpoly)
            val += variation(dpoly, 11, 0.0, t_split, 0, 0.0, k_p, signed)
        if t_split < t_end:
            # the stopped peer sits at its end position
            held = np.zeros((N, 6))
            for i in range(N):
                held[i, 0] = pheld[p, i]
            _pair_poly(own, held, inv_r2[p], dpoly)
            val += variation(dpoly, 11, t_split, t_end, 0, 0.0, k_p, signed)
        out[p] = val


@njit(cache=True)
def evaluate(x0, xe, T, taus_sq, q_dynm, q_obs, q_lim, k_t, k_p, pc, pdur, pheld,
             inv_r2, rmin, horizon, screen, terms):
    """Condensed objective at ``T``; ``terms`` receives (smooth, limits, collision, time)."""
    c = np.empty((x0.shape[0], 6))
    condensed_coeffs(x0, xe, T, c)
    terms[0] = q_dynm * jerk_energy(c, T) if q_dynm != 0.0 else 0.0
    terms[1] = q_lim * limits_integral(c, T, taus_sq, k_p, False, screen) if q_lim != 0.0 else 0.0
    terms[2] = 0.0
    if q_obs != 0.0 and pc.shape[0] > 0:
        per = np.empty(pc.shape[0])
        collision_terms(c, min(T, horizon), pc, pdur, pheld, inv_r2, rmin, k_p, False,
                        screen, per)
        terms[2] = q_obs * per.sum()
    terms[3] = k_t * T * T
    return terms[0] + terms[1] + terms[2] + terms[3]
