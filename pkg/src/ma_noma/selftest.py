"""Quick invariant checks runnable without pytest (``ma-noma selftest``)."""

from __future__ import annotations

import sys

import numpy as np

from .alloc import AllocProblem, peak_rate, solve_noma, stationarity_U
from .channel import gain, sample_channel_pair
from .fbl import NomaAllocation, error_prob, q_function, throughput_pair
from .placement import (ScaConfig, delta_bound, grad_G, initial_state, quadratic_surrogate,
                        sca_step, surrogate_G)


def _channels(seed, count):
    return [sample_channel_pair(np.random.SeedSequence([seed, i])) for i in range(count)]


def check_q_function(rng):
    ok = abs(q_function(0.0) - 0.5) < 1e-15
    ok &= abs(q_function(1.0) - 0.15865525393145707) < 1e-15
    ok &= bool(q_function(np.inf) == 0.0 and q_function(-np.inf) == 1.0)
    return ok, "Q(0), Q(1), tails"


def check_gain_bound(rng):
    worst = 0.0
    for ch1, ch2 in _channels(rng.integers(2**32), 50):
        for ch in (ch1, ch2):
            a = ch.geometry.region_half_width
            u = rng.uniform(-a, a, size=(20, 2))
            worst = max(worst, float(np.max(gain(ch, u) / ch.gain_upper_bound)))
    return worst <= 1.0 + 1e-9, f"max gain / l1 bound = {worst:.6f}"


def check_sca(rng):
    worst_drop, worst_grad, worst_curv, worst_gap = 0.0, 0.0, 0.0, 0.0
    for ch, _ in _channels(rng.integers(2**32), 20):
        a = ch.geometry.region_half_width
        state = initial_state(ch, rng.uniform(-a, a, 2))
        for _ in range(30):
            nxt = sca_step(ch, state, ScaConfig())
            worst_drop = max(worst_drop, state.gain - nxt.gain)
            state = nxt
        uk = np.asarray(state.u)
        u = rng.uniform(-a, a, 2)
        h = 1e-6 * ch.geometry.wavelength
        fd = np.array([(surrogate_G(ch, uk, u + e) - surrogate_G(ch, uk, u - e)) / (2 * h)
                       for e in np.eye(2) * h])
        g = grad_G(ch, uk, u)
        worst_grad = max(worst_grad, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)))
        pts = rng.uniform(-a, a, size=(200, 2))
        gap = quadratic_surrogate(ch, uk, pts) - surrogate_G(ch, uk, pts)
        worst_gap = max(worst_gap, float(np.max(gap)))
        hess = np.empty((2, 2))
        for i, ei in enumerate(np.eye(2) * 1e-4):
            for j, ej in enumerate(np.eye(2) * 1e-4):
                hess[i, j] = (surrogate_G(ch, uk, u + ei + ej) - surrogate_G(ch, uk, u + ei - ej)
                              - surrogate_G(ch, uk, u - ei + ej)
                              + surrogate_G(ch, uk, u - ei - ej)) / (4e-8)
        worst_curv = max(worst_curv, float(np.max(np.abs(np.linalg.eigvalsh(hess)))
                                           / delta_bound(ch, uk)))
    ok = worst_drop <= 1e-9 and worst_grad < 1e-5 and worst_gap <= 1e-9 and worst_curv <= 1.0
    return ok, (f"gain drop {worst_drop:.1e}, grad rel err {worst_grad:.1e}, "
                f"surrogate excess {worst_gap:.1e}, |hess|/delta {worst_curv:.3f}")


def check_monotone_throughput(rng):
    bad = 0
    for _ in range(200):
        g1, g2 = rng.uniform(1e-3, 1.0, 2)
        P2 = rng.uniform(0.5, 1.0) * 1e3
        alloc = NomaAllocation(1e3 - P2, P2, rng.uniform(0, np.log2(1 + g1 * (1e3 - P2))),
                               rng.uniform(0, 3), 100)
        t1, t2 = throughput_pair(g1, g2, alloc)
        for s in (1.1, 2.0, 10.0):
            u1, _ = throughput_pair(g1 * s, g2, alloc)
            _, u2 = throughput_pair(g1, g2 * s, alloc)
            bad += (u1 < t1 - 1e-12) + (u2 < t2 - 1e-12)
    return bad == 0, f"{bad} monotonicity violations"


def check_stationarity(rng):
    worst = 0.0
    for _ in range(20):
        snr, N = 10 ** rng.uniform(-1, 4), int(rng.integers(20, 1000))
        r = peak_rate(snr, N)
        grid = np.linspace(0, np.log2(1 + snr) * 1.2, 20001)
        best = grid[np.argmax(grid * (1 - error_prob(snr, N, grid)))]
        worst = max(worst, abs(r - best) / (grid[1] - grid[0]))
    ok = worst <= 1.0 and stationarity_U(1.0, 100, 0.0) > 0.5
    return ok, f"U-root vs grid argmax: {worst:.2f} grid steps"


def check_allocator(rng):
    worst = 0.0
    for ch1, ch2 in _channels(rng.integers(2**32), 5):
        p = AllocProblem(gain(ch1, (0, 0)), gain(ch2, (0, 0)), 1e6, 100, 1.0)
        sol = solve_noma(p)
        worst = max(worst, abs(sol.T2 - p.T0),
                    abs(sol.allocation.P1 + sol.allocation.P2 - p.Pmax) / p.Pmax)
    return worst <= 1e-6, f"max |T2 - T0| or budget gap {worst:.1e}"


CHECKS = [
    ("q_function", check_q_function),
    ("gain_l1_bound", check_gain_bound),
    ("sca_properties", check_sca),
    ("throughput_monotone_in_gain", check_monotone_throughput),
    ("stationarity_root", check_stationarity),
    ("allocator_constraints", check_allocator),
]


def run_selftest(seed: int = 0, stream=None) -> int:
    stream = stream or sys.stdout
    rng = np.random.default_rng(seed)
    failed = 0
    for name, fn in CHECKS:
        ok, detail = fn(rng)
        failed += not ok
        stream.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
    stream.write(f"{len(CHECKS) - failed}/{len(CHECKS)} checks passed\n")
    return 0 if failed == 0 else 1
