"""Antenna placement by successive convex approximation (minorize-maximize).

At the expansion point ``u_k`` the gain ``f^H W f`` (``W = w w^H``) is bounded
below by ``2 G(u) - gain(u_k)`` with ``G(u) = Re{v^H f(u)}``, ``v = W f(u_k)``.
``G`` in turn is bounded below by a concave quadratic with curvature
``delta``; maximizing that quadratic over the box gives the next iterate.
Each step therefore never decreases the gain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import AntennaPosition, UserChannel, frv


@dataclass(frozen=True)
class ScaConfig:
    max_iterations: int = 200
    convergence_tol: float = 1e-8
    initial_position: AntennaPosition = AntennaPosition(0.0, 0.0)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")


@dataclass(frozen=True, eq=False)
class ScaState:
    u: AntennaPosition
    v: np.ndarray
    gain: float
    iteration: int = 0


class PlacementResult(NamedTuple):
    position: AntennaPosition
    gain: float
    diagnostics: dict


def _weights(channel: UserChannel, u_k) -> np.ndarray:
    # v = W f(u_k) = w (w^H f(u_k)); rank one, so no L x L matrix is formed.
    h_k = frv(channel.geometry, u_k) @ np.conj(channel.eprv)
    return channel.eprv * h_k


def _angles(channel: UserChannel, v: np.ndarray, u) -> np.ndarray:
    geo = channel.geometry
    return geo.wavenumber * (np.asarray(u, dtype=float) @ geo.directions.T) - np.angle(v)


def _grad_v(channel: UserChannel, v: np.ndarray, u) -> np.ndarray:
    geo = channel.geometry
    s = np.abs(v) * np.sin(_angles(channel, v, u))
    return -geo.wavenumber * (s @ geo.directions)


def _delta_v(channel: UserChannel, v: np.ndarray) -> float:
    return 2.0 * channel.geometry.wavenumber ** 2 * float(np.sum(np.abs(v)))


def surrogate_G(channel: UserChannel, u_k, u):
    """``G(u) = sum_p |b_p| cos(Gamma_p(u))`` built at expansion point ``u_k``."""
    v = _weights(channel, u_k)
    return np.cos(_angles(channel, v, u)) @ np.abs(v)


def grad_G(channel: UserChannel, u_k, u) -> np.ndarray:
    return _grad_v(channel, _weights(channel, u_k), u)


def delta_bound(channel: UserChannel, u_k) -> float:
    """Curvature ``(8 pi^2 / lambda^2) sum_p |b_p|`` of the quadratic minorizer.

    Every Hessian of ``G`` is ``-k^2 sum_p |b_p| cos(Gamma_p) rho_p rho_p^T``
    with ``|rho_p| <= 1``, so its spectral norm is at most half of this.
    """
    return _delta_v(channel, _weights(channel, u_k))


def quadratic_surrogate(channel: UserChannel, u_k, u):
    """Concave quadratic lower bound of ``G`` that touches it at ``u_k``."""
    u_k = np.asarray(u_k, dtype=float)
    d = np.asarray(u, dtype=float) - u_k
    g0 = surrogate_G(channel, u_k, u_k)
    grad = grad_G(channel, u_k, u_k)
    delta = delta_bound(channel, u_k)
    return g0 + d @ grad - 0.5 * delta * np.sum(d * d, axis=-1)


def _state_at(channel: UserChannel, u, iteration: int) -> ScaState:
    u = AntennaPosition(*map(float, u))
    h = frv(channel.geometry, u) @ np.conj(channel.eprv)
    return ScaState(u, channel.eprv * h, float(h.real ** 2 + h.imag ** 2), iteration)


def initial_state(channel: UserChannel, u0) -> ScaState:
    return _state_at(channel, u0, 0)


def sca_step(channel: UserChannel, state: ScaState, config: ScaConfig | None = None
             ) -> ScaState:
    """One minorize-maximize step.

    The quadratic surrogate has Hessian ``-delta * I``, so it is separable and
    its maximizer over the box is exactly the componentwise clamp of the free
    maximizer ``u_k + grad / delta``.
    """
    u_k = np.asarray(state.u, dtype=float)
    delta = _delta_v(channel, state.v)
    if delta == 0.0:
        # zero gain at u_k: v = 0 and the surrogate is flat
        return ScaState(state.u, state.v, state.gain, state.iteration + 1)
    u_free = u_k + _grad_v(channel, state.v, u_k) / delta
    return _state_at(channel, channel.geometry.clamp(u_free), state.iteration + 1)


def _ascend(channel: UserChannel, u0, config: ScaConfig):
    state = initial_state(channel, u0)
    history = [state.gain]
    converged = False
    for _ in range(config.max_iterations):
        nxt = sca_step(channel, state, config)
        history.append(nxt.gain)
        improvement = nxt.gain - state.gain
        state = nxt
        if improvement <= config.convergence_tol * max(abs(state.gain), np.finfo(float).tiny):
            converged = True
            break
    return state, history, converged


def optimize_position(channel: UserChannel, config: ScaConfig | None = None,
                      n_starts: int = 1, seed=None) -> PlacementResult:
    """Maximize the channel gain over the square region.

    Starts from ``config.initial_position``. With ``n_starts > 1`` the extra
    starting points are drawn uniformly over the region from ``seed`` and the
    best end point wins.
    """
    config = config or ScaConfig()
    a = channel.geometry.region_half_width
    starts = [np.asarray(config.initial_position, dtype=float)]
    if n_starts > 1:
        rng = np.random.default_rng(seed)
        starts.extend(rng.uniform(-a, a, size=(n_starts - 1, 2)))

    best = None
    runs = []
    for u0 in starts:
        state, history, converged = _ascend(channel, u0, config)
        runs.append({"start": tuple(map(float, u0)), "gain": state.gain,
                     "iterations": state.iteration, "converged": converged,
                     "history": history})
        if best is None or state.gain > best[0].gain:
            best = (state, len(runs) - 1)

    state, idx = best
    diagnostics = {
        "initial_gain": runs[0]["history"][0],
        "iterations": runs[idx]["iterations"],
        "converged": runs[idx]["converged"],
        "gain_history": runs[idx]["history"],
        "best_start": idx,
        "runs": runs,
    }
    return PlacementResult(state.u, state.gain, diagnostics)
