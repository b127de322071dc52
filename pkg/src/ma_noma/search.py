"""Bracketed bisection (vectorised) and golden-section search."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(fn, lo, hi, xtol=1e-10, max_iter=200):
    """Elementwise root of ``fn`` on ``[lo, hi]``.

    ``fn`` must take an array and differ in sign between ``lo`` and ``hi``
    (either way round). Rows without a sign change converge to whichever
    endpoint the sign pattern points to; callers check brackets first.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    lo_positive = np.asarray(fn(lo)) > 0
    for _ in range(max_iter):
        if np.all(hi - lo <= xtol):
            break
        mid = 0.5 * (lo + hi)
        same = (np.asarray(fn(mid)) > 0) == lo_positive
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    root = 0.5 * (lo + hi)
    return root[()] if root.ndim == 0 else root


def golden_max(fn, a, b, xtol):
    """Maximize a scalar function on ``[a, b]`` by golden-section search.

    Returns ``(x_best, f_best, evaluations)`` where ``evaluations`` lists
    every ``(x, f(x))`` pair probed, in order.
    """
    evals = []

    def f(x):
        y = fn(x)
        evals.append((x, y))
        return y

    h = b - a
    if h <= xtol:
        x = 0.5 * (a + b)
        return x, f(x), evals
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    while h > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    x, y = max(evals, key=lambda e: e[1])
    return x, y, evals
