"""Power and rate allocation at the access point.

NOMA: maximize the core user's effective throughput ``T1`` over
``(P1, P2, R1, R2)`` with ``P1 + P2 <= Pmax`` and ``T2 >= T0``. At the optimum
both constraints are tight, which leaves a one-dimensional search over
``P2 in [P2_lower, Pmax]``. For each probed ``P2``:

* ``R2`` solves ``T2(R2) = T0`` by fixed-point iteration (smaller root);
* ``R1`` maximizes ``T1`` region by region via roots of the stationarity
  function ``U``.

OMA: a TDMA split ``N1 + N2 = N`` with full power in each slot, searched
exhaustively.

All inner routines work on numpy arrays so a whole ``P2`` grid (or every
TDMA split) is handled in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .fbl import (LN2, NomaAllocation, capacity, dispersion_factor,
                  effective_error_u1, error_prob, q_function, sinr_set)
from .search import bisect, golden_max

EXACT = "exact"
PRINTED = "printed"
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
RATE_XTOL = 1e-10
BOUNDARY_RTOL = 1e-12


class InfeasibleError(ValueError):
    """The throughput target ``T0`` cannot be met."""

    def __init__(self, message, max_achievable=None):
        super().__init__(message)
        self.max_achievable = max_achievable


@dataclass(frozen=True)
class AllocProblem:
    gain1: float
    gain2: float
    Pmax: float
    N: int
    T0: float
    noise1: float = 1.0
    noise2: float = 1.0

    def __post_init__(self):
        if not self.Pmax > 0:
            raise ValueError("Pmax must be positive")
        if self.T0 < 0:
            raise ValueError("T0 must be non-negative")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.gain1 < 0 or self.gain2 < 0:
            raise ValueError("channel gains must be non-negative")
        if not (self.noise1 > 0 and self.noise2 > 0):
            raise ValueError("noise powers must be positive")


@dataclass(frozen=True)
class OmaAllocation:
    """TDMA split: user ``i`` gets ``N_i`` channel uses at power ``P``."""

    N1: int
    N2: int
    R1: float
    R2: float
    P: float


@dataclass(frozen=True)
class SearchConfig:
    scan_points: int = 64
    xtol: float = 1e-4          # golden-section width, relative to Pmax
    refine_points: int = 17
    stationarity: str = EXACT


@dataclass(frozen=True)
class AllocSolution:
    allocation: NomaAllocation | OmaAllocation
    T1: float
    T2: float
    p2_lower: float
    diagnostics: dict = field(default_factory=dict, compare=False)


class RateChoice(NamedTuple):
    R1: np.ndarray
    T1: np.ndarray
    root_region1: np.ndarray    # NaN where no sign change
    root_region2: np.ndarray


# ---------------------------------------------------------------------------
# single-link rate calculus


def stationarity_U(snr, N, R, form=EXACT):
    """Derivative of ``R (1 - Q(f(snr, N, R)))`` with respect to ``R``.

    ``form="printed"`` instead evaluates the literal variant whose last term
    carries the factor ``N * R`` rather than ``R * sqrt(N)``; its root is not
    the throughput maximizer and it is kept only for replication.
    """
    snr = np.asarray(snr, dtype=float)
    R = np.asarray(R, dtype=float)
    if form == EXACT:
        gain_n = np.sqrt(N)
    elif form == PRINTED:
        gain_n = np.asarray(N, dtype=float)
    else:
        raise ValueError(f"unknown stationarity form {form!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = LN2 / np.sqrt(dispersion_factor(snr))
        f = scale * np.sqrt(N) * (capacity(snr) - R)
        u = 1.0 - q_function(f) - R * gain_n * scale * _INV_SQRT_2PI * np.exp(-0.5 * f * f)
    return u[()] if isinstance(u, np.ndarray) else u


def link_throughput(snr, N, R):
    """``R (1 - eps)`` for a single link."""
    return R * (1.0 - error_prob(snr, N, R))


def peak_rate(snr, N, form=EXACT):
    """Rate at the root of ``U(snr, N, .)``; the throughput-optimal rate for the exact form.

    ``R (1 - Q(f))`` is log-concave in ``R`` so the root is unique. It lies
    below ``log2(1 + snr) + 3 / (ln2 sqrt(N / V))`` (where ``f = -3``).
    Zero SNR gives rate zero.
    """
    snr = np.asarray(snr, dtype=float)
    shape = np.broadcast_shapes(snr.shape, np.shape(N))
    snr_b = np.broadcast_to(snr, shape)
    N_b = np.broadcast_to(np.asarray(N, dtype=float), shape)
    out = np.zeros(shape)
    live = snr_b > 0
    if np.any(live):
        s, n = snr_b[live], N_b[live]
        hi = capacity(s) + 3.0 / (LN2 * np.sqrt(n / dispersion_factor(s)))
        while True:
            neg = stationarity_U(s, n, hi, form) < 0
            if np.all(neg):
                break
            hi = np.where(neg, hi, 2.0 * hi)
        out[live] = bisect(lambda r: stationarity_U(s, n, r, form), 0.0, hi, RATE_XTOL)
    return out[()]


def max_link_throughput(snr, N, form=EXACT):
    """Largest ``R (1 - eps)`` attainable on a link (at :func:`peak_rate`)."""
    r = peak_rate(snr, N, form)
    return link_throughput(snr, N, r)


def _smaller_root(snr, N, target, r_peak):
    # T(R) - target is negative at R = target and non-negative at the peak.
    return bisect(lambda r: link_throughput(snr, N, r) - target, target, r_peak,
                  xtol=1e-13)


def _fixed_point(snr, N, target, tol, max_iter):
    """Iterate ``R <- target / (1 - eps(R))`` from ``R = target``.

    The map is increasing in ``R`` and starts below the smaller root, so the
    iterates climb monotonically onto it. A step that reverses direction is
    damped by one half. Iterates passing the bracket ceiling used by
    :func:`peak_rate` cannot reach a root and are abandoned. Returns the
    iterates and a convergence mask.
    """
    r = np.array(target, dtype=float, copy=True)
    with np.errstate(divide="ignore"):
        ceiling = capacity(snr) + 3.0 / (LN2 * np.sqrt(N / dispersion_factor(snr)))
    done = r <= 0.0
    dead = np.zeros_like(done)
    prev_step = np.zeros_like(r)
    for _ in range(max_iter):
        if np.all(done | dead):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            r_new = target / (1.0 - error_prob(snr, N, r))
            step = r_new - r
            flip = step * prev_step < 0
            r_new = np.where(flip, r + 0.5 * step, r_new)
            step = r_new - r
            now = np.abs(step) <= tol * np.maximum(1.0, np.abs(r))
        active = ~(done | dead)
        r = np.where(active, r_new, r)
        prev_step = step
        done = done | (active & now)
        dead = dead | (active & ~now & ~(r <= ceiling))
    return r, done


def rate_for_target(snr, N, target, tol=1e-14, max_iter=100):
    """Smaller rate with ``R (1 - eps(snr, N, R)) = target``; NaN if unreachable.

    Vectorised companion of :func:`fixed_point_R2`. Returns
    ``(rate, achievable_max, used_bisection)``; ``achievable_max`` is only
    computed (else NaN) where the fixed point did not settle, since a
    settled iterate already proves the target reachable.
    """
    snr, N, target = np.broadcast_arrays(np.asarray(snr, float), np.asarray(N, float),
                                         np.asarray(target, float))
    rate = np.full(snr.shape, np.nan)
    t_max = np.full(snr.shape, np.nan)
    fallback = np.zeros(snr.shape, dtype=bool)
    rate[target <= 0.0] = 0.0
    live = target > 0.0
    if np.any(live):
        r, ok = _fixed_point(snr[live], N[live], target[live], tol, max_iter)
        rate[live] = np.where(ok, r, np.nan)
        stuck = np.zeros(snr.shape, dtype=bool)
        stuck[live] = ~ok
        if np.any(stuck):
            s, n, t = snr[stuck], N[stuck], target[stuck]
            r_peak = np.atleast_1d(peak_rate(s, n))
            best = np.atleast_1d(link_throughput(s, n, r_peak))
            t_max[stuck] = best
            reach = t <= best
            r = np.full(s.shape, np.nan)
            if np.any(reach):
                r[reach] = _smaller_root(s[reach], n[reach], t[reach], r_peak[reach])
            rate[stuck] = r
            fallback[stuck] = reach
    return rate[()], t_max[()], fallback[()]


def fixed_point_R2(snr22, N, T0, tol=1e-14, max_iter=100) -> float:
    """Edge-user rate meeting ``R2 (1 - eps2) = T0`` exactly (the smaller root).

    Raises :class:`InfeasibleError` carrying the largest achievable
    throughput when ``T0`` is out of reach.
    """
    rate, _, _ = rate_for_target(snr22, N, T0, tol, max_iter)
    if np.isnan(rate):
        t_max = max_link_throughput(snr22, N)
        raise InfeasibleError(
            f"T0={T0} exceeds the edge user's best throughput {float(t_max):.6g}",
            max_achievable=float(t_max))
    return float(rate)


# ---------------------------------------------------------------------------
# core-user rate


def _t1_region1(R, s11, s11n, e21, N):
    return R * ((1.0 - e21) * (1.0 - error_prob(s11, N, R))
                + e21 * (1.0 - error_prob(s11n, N, R)))


def _t1_region2(R, s11, e21, N):
    return R * (1.0 - e21) * (1.0 - error_prob(s11, N, R))


def _t1(R, s11, s11n, e21, N):
    in1 = R <= capacity(s11n)
    return np.where(in1, _t1_region1(R, s11, s11n, e21, N), _t1_region2(R, s11, e21, N))


def _region_max(lo, hi, objective, derivative, points):
    """Best rate on ``[lo, hi]`` for each row.

    A grid scan picks the ``+ -> -`` sign change of ``derivative`` with the
    highest objective on its left end; that bracket is bisected. Returns the
    bisected root (NaN if none) and the better of root and best grid point.
    """
    t = np.linspace(0.0, 1.0, points)
    grid = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    obj = objective(grid)
    der = derivative(grid)
    change = (der[:, :-1] > 0) & (der[:, 1:] <= 0)
    score = np.where(change, obj[:, :-1], -np.inf)
    j = np.argmax(score, axis=1)
    has = change[np.arange(len(j)), j]
    rows = np.arange(len(j))
    b_lo = grid[rows, j]
    b_hi = grid[rows, j + 1]
    root = np.full(len(j), np.nan)
    if np.any(has):
        idx = np.flatnonzero(has)

        def d_sub(r):
            # derivative() closes over per-row parameters, so evaluate all rows
            full = b_lo[:, None].copy()
            full[idx, 0] = r
            return derivative(full)[idx, 0]

        root[idx] = bisect(d_sub, b_lo[idx], b_hi[idx], RATE_XTOL)
    best_grid = grid[rows, np.argmax(obj, axis=1)]
    return root, best_grid


def optimal_R1(s21, s11, s11n, N, R2, form=EXACT, points=33) -> RateChoice:
    """Core-user rate maximizing ``T1`` given the SINRs and the edge rate.

    Region 1 (``R1 <= log2(1 + s11n)``) uses the mixed stationarity
    condition ``(1 - e21) U(s11) + e21 U(s11n) = 0``; region 2 (up to
    ``log2(1 + s11)``) uses ``U(s11) = 0``. Every root found, the best grid
    point of each region and the region boundary are compared on ``T1``.
    """
    s21, s11, s11n, R2 = (np.atleast_1d(np.asarray(a, dtype=float))
                          for a in np.broadcast_arrays(s21, s11, s11n, R2))
    e21 = error_prob(s21, N, R2)
    # T1 jumps down just past the region-1 edge; keep the edge candidate a
    # hair inside so rounding elsewhere cannot flip it into region 2.
    c1n = capacity(s11n) * (1.0 - BOUNDARY_RTOL)
    c1 = capacity(s11)
    e21c = e21[:, None]
    s11c, s11nc = s11[:, None], s11n[:, None]

    root1, grid1 = _region_max(
        np.zeros_like(c1n), c1n,
        lambda r: _t1_region1(r, s11c, s11nc, e21c, N),
        lambda r: (1.0 - e21c) * stationarity_U(s11c, N, r, form)
        + e21c * stationarity_U(s11nc, N, r, form),
        points)
    root2, grid2 = _region_max(
        c1n, c1,
        lambda r: _t1_region2(r, s11c, e21c, N),
        lambda r: stationarity_U(s11c, N, r, form),
        points)

    cands = np.column_stack([root1, grid1, c1n, root2, grid2])
    cands = np.clip(np.nan_to_num(cands, nan=0.0), 0.0, c1[:, None])
    vals = _t1(cands, s11c, s11nc, e21c, N)
    k = np.argmax(vals, axis=1)
    rows = np.arange(len(k))
    return RateChoice(cands[rows, k], vals[rows, k], root1, root2)


# ---------------------------------------------------------------------------
# NOMA power search


@lru_cache(maxsize=4096)
def required_sinr(N: int, T0: float, form: str = EXACT) -> float:
    """Smallest edge-user SINR whose best throughput reaches ``T0``.

    The best throughput grows strictly with SINR, so bisection on ``log(snr)``
    finds the unique crossing. Depends on ``(N, T0)`` only, hence the cache.
    """
    if T0 <= 0:
        return 0.0

    def excess(log_s):
        s = np.exp(log_s)
        return link_throughput(s, N, peak_rate(s, N, form)) - T0

    lo, hi = np.log(1e-3), np.log(2.0 ** T0)
    while excess(lo) >= 0:
        lo -= 10.0
    while excess(hi) < 0:
        hi += 2.0
        if hi > 700:
            raise InfeasibleError(f"T0={T0} unreachable at any SINR for N={N}")
    return float(np.exp(bisect(excess, lo, hi, xtol=1e-13)))


def p2_from_sinr(snr, problem: AllocProblem):
    """Invert ``snr = P2 g2 / ((Pmax - P2) g2 + s2)`` for ``P2``."""
    g, s = problem.gain2, problem.noise2
    return snr * (problem.Pmax * g + s) / (g * (1.0 + snr))


def p2_lower_bound(problem: AllocProblem, form: str = EXACT) -> float:
    """Least ``P2`` with which user 2 can still reach ``T0``.

    The edge SINR is increasing in ``P2`` (``P1 = Pmax - P2``), so the
    threshold SINR maps back to a unique power.
    """
    if problem.T0 <= 0:
        return 0.0
    snr_cap = problem.Pmax * problem.gain2 / problem.noise2
    best = float(max_link_throughput(snr_cap, problem.N, form)) if snr_cap > 0 else 0.0
    if best < problem.T0:
        raise InfeasibleError(
            f"T0={problem.T0} unreachable even with P2=Pmax (best {best:.6g})",
            max_achievable=best)
    snr_req = required_sinr(int(problem.N), float(problem.T0), form)
    return float(min(p2_from_sinr(snr_req, problem), problem.Pmax))


def evaluate_p2(problem: AllocProblem, P2, form: str = EXACT) -> dict:
    """Optimize ``(R1, R2)`` at each given ``P2`` with ``P1 = Pmax - P2``.

    Entries where ``T0`` is unreachable get ``T1 = -inf`` and NaN rates.
    """
    P2 = np.atleast_1d(np.asarray(P2, dtype=float))
    P1 = problem.Pmax - P2
    s21, s11, s11n, s22 = sinr_set(problem.gain1, problem.gain2, P1, P2,
                                   problem.noise1, problem.noise2)
    R2, _, fallback = rate_for_target(s22, problem.N, problem.T0)
    R2 = np.atleast_1d(R2)
    feasible = ~np.isnan(R2)
    T1 = np.full(P2.shape, -np.inf)
    R1 = np.full(P2.shape, np.nan)
    roots = np.full((2,) + P2.shape, np.nan)
    if np.any(feasible):
        ch = optimal_R1(s21[feasible], s11[feasible], s11n[feasible], problem.N,
                        R2[feasible], form)
        T1[feasible], R1[feasible] = ch.T1, ch.R1
        roots[0, feasible], roots[1, feasible] = ch.root_region1, ch.root_region2
    return {"P2": P2, "P1": P1, "R1": R1, "R2": R2, "T1": T1,
            "feasible": feasible, "bisection_fallback": np.atleast_1d(fallback),
            "root_region1": roots[0], "root_region2": roots[1]}


def _noma_solution(problem, P2, p2l, form, diagnostics) -> AllocSolution:
    ev = evaluate_p2(problem, [P2], form)
    if not ev["feasible"][0]:
        raise InfeasibleError(f"T0={problem.T0} unreachable at P2={P2:.6g}")
    alloc = NomaAllocation(float(ev["P1"][0]), float(P2), float(ev["R1"][0]),
                           float(ev["R2"][0]), int(problem.N))
    s21, s11, s11n, s22 = sinr_set(problem.gain1, problem.gain2, alloc.P1, alloc.P2,
                                   problem.noise1, problem.noise2)
    eps1, branch = effective_error_u1(s21, s11, s11n, alloc.N, alloc.R1, alloc.R2)
    T1 = float(alloc.R1 * (1.0 - eps1))
    T2 = float(alloc.R2 * (1.0 - error_prob(s22, alloc.N, alloc.R2)))
    diagnostics.update(sic_branch=int(branch),
                       R1_dagger=float(ev["root_region1"][0]),
                       R1_ddagger=float(ev["root_region2"][0]),
                       R2_bisection_fallback=bool(ev["bisection_fallback"][0]))
    return AllocSolution(alloc, T1, T2, p2l, diagnostics)


def solve_noma_fixed_p2(problem: AllocProblem, P2: float,
                        search: SearchConfig | None = None) -> AllocSolution:
    """Best ``(R1, R2)`` at a prescribed ``P2`` (``P1 = Pmax - P2``)."""
    search = search or SearchConfig()
    if not 0.0 <= P2 <= problem.Pmax:
        raise ValueError(f"P2={P2} outside [0, Pmax]")
    p2l = p2_lower_bound(problem, search.stationarity)
    return _noma_solution(problem, float(P2), p2l, search.stationarity, {})


def solve_noma(problem: AllocProblem, search: SearchConfig | None = None) -> AllocSolution:
    """Full NOMA allocation: scan, golden-section and local refinement over ``P2``.

    ``T1`` as a function of ``P2`` is not guaranteed unimodal, so a linear
    pre-scan locates the best cell before golden-section narrows it down.
    """
    search = search or SearchConfig()
    form = search.stationarity
    p2l = p2_lower_bound(problem, form)
    Pmax = problem.Pmax

    grid = np.linspace(p2l, Pmax, search.scan_points)
    scan = evaluate_p2(problem, grid, form)
    j = int(np.argmax(scan["T1"]))
    if not np.isfinite(scan["T1"][j]):
        raise InfeasibleError(f"no feasible P2 found in [{p2l:.6g}, {Pmax:.6g}]")
    a = grid[max(j - 1, 0)]
    b = grid[min(j + 1, len(grid) - 1)]

    def t1_at(p2):
        return float(evaluate_p2(problem, [p2], form)["T1"][0])

    x_gold, y_gold, evals = golden_max(t1_at, a, b, search.xtol * Pmax)

    probes = [(float(p), float(t)) for p, t in zip(grid, scan["T1"])] + evals
    half = max(search.xtol * Pmax, 1e-12 * Pmax)
    local = np.clip(np.linspace(x_gold - 2 * half, x_gold + 2 * half,
                                search.refine_points), p2l, Pmax)
    loc = evaluate_p2(problem, local, form)
    probes += [(float(p), float(t)) for p, t in zip(local, loc["T1"])]
    p_best, _ = max(probes, key=lambda e: e[1])

    diagnostics = {"scan_P2": grid, "scan_T1": scan["T1"],
                   "golden_evaluations": len(evals), "bracket": (float(a), float(b))}
    return _noma_solution(problem, p_best, p2l, form, diagnostics)


# ---------------------------------------------------------------------------
# OMA baseline


def solve_oma(problem: AllocProblem, search: SearchConfig | None = None) -> AllocSolution:
    """TDMA baseline: exhaustive search over the split ``N2 = 1 .. N-1``.

    Each user transmits alone at ``Pmax`` in its own slot with blocklength
    ``N_i``; ``T_i = (N_i / N) R_i (1 - eps_i)``.
    """
    search = search or SearchConfig()
    N = int(problem.N)
    if N < 2:
        raise ValueError("OMA needs N >= 2 to give both users a slot")
    N2 = np.arange(1, N)
    N1 = N - N2
    snr1 = problem.Pmax * problem.gain1 / problem.noise1
    snr2 = problem.Pmax * problem.gain2 / problem.noise2
    # user 2 must reach R2 (1 - eps2) = T0 N / N2 inside its own slot
    target = problem.T0 * N / N2
    R2, _, _ = rate_for_target(np.full(N2.shape, snr2), N2, target)
    R2 = np.atleast_1d(R2)
    feasible = ~np.isnan(R2)
    if not np.any(feasible):
        best = float(np.max(N2 / N * max_link_throughput(snr2, N2)))
        raise InfeasibleError(
            f"T0={problem.T0} unreachable by any TDMA split (best {best:.6g})",
            max_achievable=best)
    R1 = np.atleast_1d(peak_rate(np.full(N1.shape, snr1), N1, search.stationarity))
    T1 = np.where(feasible, N1 / N * link_throughput(snr1, N1, R1), -np.inf)
    k = int(np.argmax(T1))
    T2 = float(N2[k] / N * link_throughput(snr2, N2[k], R2[k]))
    alloc = OmaAllocation(int(N1[k]), int(N2[k]), float(R1[k]), float(R2[k]),
                          float(problem.Pmax))
    return AllocSolution(alloc, float(T1[k]), T2, float("nan"),
                         {"feasible_splits": int(feasible.sum()), "split_T1": T1})
