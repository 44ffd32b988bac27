"""Polynomial helpers on ascending coefficient arrays.

A polynomial ``c0 + c1*t + ... + cd*t**d`` is stored as a 1-D float array
``[c0, c1, ..., cd]``. Batched variants accept a 2-D array whose rows are
polynomials of equal length.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import DegenerateInput

# relative size under which a leading coefficient is treated as zero
LEADING_TOL = 1e-12
# |imag| / max(1, |z|) under which an eigenvalue counts as real
IMAG_TOL = 1e-7


def polyeval(c, t):
    """Evaluate ``c`` at ``t`` (scalar or array) with Horner's rule."""
    c = np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    if c.size == 0:
        return np.zeros_like(t)
    out = np.full_like(t, c[-1])
    for ck in c[-2::-1]:
        out *= t
        out += ck
    return out


def derivative(c, order=1):
    """Coefficients of the ``order``-th derivative (at least one coefficient)."""
    c = np.asarray(c, dtype=float)
    for _ in range(order):
        if c.shape[-1] <= 1:
            return np.zeros(c.shape[:-1] + (1,))
        c = c[..., 1:] * np.arange(1, c.shape[-1])
    return c


def antiderivative(c):
    """Antiderivative with zero constant term."""
    c = np.asarray(c, dtype=float)
    out = np.zeros(c.shape[:-1] + (c.shape[-1] + 1,))
    out[..., 1:] = c / np.arange(1, c.shape[-1] + 1)
    return out


def polymul(a, b):
    """Product of two polynomials (batched along leading axes)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)
    a, b = np.broadcast_arrays(a[..., :, None], b[..., None, :])
    n = a.shape[-2] + b.shape[-1] - 1
    out = np.zeros(a.shape[:-2] + (n,))
    prod = a * b
    for i in range(prod.shape[-2]):
        out[..., i:i + prod.shape[-1]] += prod[..., i, :]
    return out


def trim(c):
    """Strip leading coefficients that are negligible next to the largest one."""
    c = np.asarray(c, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > LEADING_TOL * scale)[0]
    return c[:keep[-1] + 1].copy()


def companion(c):
    """Companion matrix of a polynomial with nonzero leading coefficient."""
    c = np.asarray(c, dtype=float)
    d = c.size - 1
    mat = np.zeros((d, d))
    mat[1:, :-1] = np.eye(d - 1)
    mat[:, -1] = -c[:-1] / c[-1]
    return mat


def _polish(c, roots, steps=2):
    """Newton refinement, keeping a step only if it reduces ``|p|``."""
    if roots.size == 0:
        return roots
    k = np.arange(c.size)
    dc = c[1:] * k[1:]
    for _ in range(steps):
        powers = roots[:, None] ** k
        f = powers @ c
        df = powers[:, :-1] @ dc
        cand = roots - f / np.where(df == 0.0, np.inf, df)
        better = np.abs((cand[:, None] ** k) @ c) <= np.abs(f)
        roots = np.where(better, cand, roots)
    return roots


def real_roots(c):
    """Real roots of a polynomial, via eigenvalues of its companion matrix.

    Coefficients are normalized by their largest magnitude and negligible
    leading terms are stripped first. Repeated roots may be reported once or
    several times.

    Raises
    ------
    DegenerateInput
        If every coefficient is (near) zero.
    """
    c = np.asarray(c, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if not np.isfinite(scale) or scale == 0.0:
        raise DegenerateInput("polynomial has no nonzero coefficients")
    c = trim(c / scale)
    if c.size == 1:
        raise DegenerateInput("polynomial is a nonzero constant")
    if c.size == 2:
        return np.array([-c[0] / c[1]])
    z = np.linalg.eigvals(companion(c))
    keep = np.abs(z.imag) <= IMAG_TOL * np.maximum(1.0, np.abs(z))
    return np.sort(_polish(c, z[keep].real))


def real_roots_batch(c):
    """Real roots for each row of ``c`` (rows padded to a common length).

    Returns a list of arrays, one per row. Rows that are identically zero or
    constant yield an empty array rather than raising, since batched callers
    use this for sign-change detection where such rows have no crossings.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    out = [np.empty(0)] * c.shape[0]
    scale = np.max(np.abs(c), axis=1)
    groups = {}
    for i in range(c.shape[0]):
        if scale[i] == 0.0 or not np.isfinite(scale[i]):
            continue
        row = trim(c[i] / scale[i])
        if row.size >= 2:
            groups.setdefault(row.size, []).append((i, row))
    for size, items in groups.items():
        if size == 2:
            for i, row in items:
                out[i] = np.array([-row[0] / row[1]])
            continue
        rows = np.array([row for _, row in items])
        d = size - 1
        mats = np.zeros((len(items), d, d))
        mats[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        mats[:, :, -1] = -rows[:, :-1] / rows[:, -1:]
        zs = np.linalg.eigvals(mats)
        for (i, row), z in zip(items, zs):
            keep = np.abs(z.imag) <= IMAG_TOL * np.maximum(1.0, np.abs(z))
            out[i] = np.sort(_polish(row, z[keep].real))
    return out


def polyeval_rows(c, t):
    """Evaluate row ``i`` of ``c`` (shape ``(S, L)``) at every entry of ``t[i]``."""
    c = np.asarray(c, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in range(c.shape[1] - 1, -1, -1):
        out = out * t + c[:, k : k + 1]
    return out


def breakpoints(c, a, b):
    """Sorted ``[a, real roots of row in (a, b)..., b]`` for each row of ``c``.

    ``c`` has shape ``(S, L)``, ``a`` and ``b`` shape ``(S,)``. The result is
    ``(S, L + 1)``; slots without a root repeat ``a`` so that consecutive
    differences over them vanish. Intended for splitting an interval into
    pieces on which another polynomial (whose derivative is ``c``) is
    monotone, so roots are not polished.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    S, L = c.shape
    pts = np.empty((S, L + 1))
    pts[:, 0] = a
    pts[:, 1:] = a[:, None]
    pts[:, -1] = b
    if L < 2:
        return pts
    scale = np.max(np.abs(c), axis=1)
    lead = np.abs(c[:, -1])
    regular = lead > LEADING_TOL * scale
    if np.any(regular):
        rows = c[regular]
        d = L - 1
        mats = np.zeros((rows.shape[0], d, d))
        if d > 1:
            mats[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        mats[:, :, -1] = -rows[:, :-1] / rows[:, -1:]
        z = np.linalg.eigvals(mats)
        real = np.abs(z.imag) <= IMAG_TOL * np.maximum(1.0, np.abs(z))
        zr = z.real
        ar, br = a[regular][:, None], b[regular][:, None]
        inside = real & (zr > ar) & (zr < br)
        pts[regular, 1:-1] = np.where(inside, zr, ar)
    for i in np.nonzero(~regular & (scale > 0))[0]:
        row = trim(c[i] / scale[i])
        if row.size < 2:
            continue
        r = real_roots(row)
        r = r[(r > a[i]) & (r < b[i])]
        pts[i, 1 : 1 + r.size] = r
    pts[:, 1:-1].sort(axis=1)
    return pts


def integral_of_square(c, T):
    """Exact ``∫_0^T c(t)^2 dt`` by term-wise integration."""
    c = np.asarray(c, dtype=float)
    sq = polymul(c, c)
    return float(polyeval(antiderivative(sq), T))


def taylor_shift(c, tau):
    """Coefficients of ``t -> c(t + tau)`` (last axis holds coefficients)."""
    c = np.asarray(c, dtype=float)
    n = c.shape[-1]
    # shift[j, k] = C(k, j) * tau**(k - j): coefficient of t**j in (t + tau)**k
    shift = np.zeros((n, n))
    for j in range(n):
        for k in range(j, n):
            shift[j, k] = comb(k, j) * tau ** (k - j)
    return c @ shift.T
