"""Far-field receive channel of a movable antenna.

Each user sees ``L`` planar paths. Moving the antenna to ``u = [x, y]``
rotates the phase of path ``k`` by ``(2*pi/lambda) * u . rho_k`` with
``rho_k = [sin(theta_k) cos(phi_k), cos(theta_k)]``. The scalar channel is
``h(u) = w^H f(u)``, where ``w`` is the effective path response vector (EPRV)
and ``f(u)`` the field response vector (FRV).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ChannelSamplingError(RuntimeError):
    """Raised when the random generator cannot meet the user ordering."""


class AntennaPosition(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class ReceiveGeometry:
    wavelength: float
    elevations: np.ndarray
    azimuths: np.ndarray
    region_half_width: float

    def __post_init__(self):
        el = np.atleast_1d(np.asarray(self.elevations, dtype=float))
        az = np.atleast_1d(np.asarray(self.azimuths, dtype=float))
        if el.ndim != 1 or el.shape != az.shape or el.size < 1:
            raise ValueError("elevations and azimuths must be equal-length 1-D arrays")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.region_half_width > 0:
            raise ValueError("region_half_width must be positive")
        object.__setattr__(self, "elevations", el)
        object.__setattr__(self, "azimuths", az)

    @property
    def num_paths(self) -> int:
        return self.elevations.size

    @property
    def directions(self) -> np.ndarray:
        """Path direction vectors ``rho_k`` stacked as an ``(L, 2)`` array."""
        return np.column_stack(
            (np.sin(self.elevations) * np.cos(self.azimuths), np.cos(self.elevations))
        )

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def contains(self, u, atol: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all(np.abs(u) <= self.region_half_width + atol))

    def clamp(self, u) -> np.ndarray:
        a = self.region_half_width
        return np.clip(np.asarray(u, dtype=float), -a, a)


@dataclass(frozen=True, eq=False)
class UserChannel:
    geometry: ReceiveGeometry
    eprv: np.ndarray
    distance: float
    noise_power: float = 1.0

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.eprv, dtype=complex))
        if w.shape != (self.geometry.num_paths,):
            raise ValueError(
                f"eprv has shape {w.shape}, expected ({self.geometry.num_paths},)"
            )
        if not self.distance > 0:
            raise ValueError("distance must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        object.__setattr__(self, "eprv", w)

    @property
    def gain_upper_bound(self) -> float:
        """Phase-aligned gain ``||w||_1^2``; no antenna position exceeds it."""
        return float(np.sum(np.abs(self.eprv)) ** 2)

    def gain(self, u) -> float | np.ndarray:
        return gain(self, u)


def phases(geometry: ReceiveGeometry, u) -> np.ndarray:
    """Per-path phase ``(2*pi/lambda) u . rho_k``; ``u`` may be ``(..., 2)``."""
    u = np.asarray(u, dtype=float)
    return geometry.wavenumber * (u @ geometry.directions.T)


def frv(geometry: ReceiveGeometry, u) -> np.ndarray:
    """Field response vector at position ``u`` (shape ``(..., L)``)."""
    return np.exp(1j * phases(geometry, u))


def gain(channel: UserChannel, u) -> float | np.ndarray:
    """Channel power gain ``|w^H f(u)|^2``.

    Accepts a single position or a stack of positions with trailing axis 2.
    """
    h = frv(channel.geometry, u) @ np.conj(channel.eprv)
    g = h.real ** 2 + h.imag ** 2
    return float(g) if np.ndim(g) == 0 else g


def random_geometry(rng: np.random.Generator, num_paths: int, wavelength: float,
                    region_side: float) -> ReceiveGeometry:
    """Draw i.i.d. elevation and azimuth angles, uniform over ``[0, pi]``."""
    el = rng.uniform(0.0, np.pi, size=num_paths)
    az = rng.uniform(0.0, np.pi, size=num_paths)
    return ReceiveGeometry(wavelength, el, az, region_side / 2.0)


def random_eprv(rng: np.random.Generator, num_paths: int, distance: float,
                alpha: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian EPRV with per-path variance ``d^-alpha / L``."""
    scale = np.sqrt(distance ** (-alpha) / num_paths / 2.0)
    return scale * (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths))


def sample_channel_pair(seed, d1: float = 20.0, d2: float = 60.0, alpha: float = 1.0,
                        num_paths: int = 4, wavelength: float = 1.0,
                        region_side: float = 3.0, noise1: float = 1.0,
                        noise2: float = 1.0, max_attempts: int = 1000
                        ) -> tuple[UserChannel, UserChannel]:
    """Draw a (core user, edge user) channel pair.

    The whole pair is redrawn until ``||w1||_1 > ||w2||_1``. ``seed`` is
    anything ``numpy.random.default_rng`` accepts; the result is a pure
    function of it and the parameters.
    """
    if not d1 < d2:
        raise ValueError("the core user must be nearer: need d1 < d2")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if num_paths < 1:
        raise ValueError("num_paths must be >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        g1 = random_geometry(rng, num_paths, wavelength, region_side)
        w1 = random_eprv(rng, num_paths, d1, alpha)
        g2 = random_geometry(rng, num_paths, wavelength, region_side)
        w2 = random_eprv(rng, num_paths, d2, alpha)
        if np.sum(np.abs(w1)) > np.sum(np.abs(w2)):
            return (UserChannel(g1, w1, d1, noise1), UserChannel(g2, w2, d2, noise2))
    raise ChannelSamplingError(
        f"no pair with ||w1||_1 > ||w2||_1 after {max_attempts} draws "
        f"(d1={d1}, d2={d2}, alpha={alpha}, L={num_paths})"
    )
