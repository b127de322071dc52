"""Normal-approximation error probabilities and effective throughput.

Everything here is vectorised over numpy broadcasting; scalar inputs give
numpy scalars back.

Two-user downlink with superposition coding. User 1 (core) first decodes
user 2's message (SIC), then its own; user 2 (edge) decodes its own message
treating user 1's as noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

LN2 = np.log(2.0)
_SQRT2 = np.sqrt(2.0)

# Branch 1: R1 decodable even after a failed SIC. Branch 2: it is not.
BRANCH_NOSIC_DECODABLE = 1
BRANCH_SIC_REQUIRED = 2


class DomainError(ValueError):
    """Raised when a rate exceeds the domain of the error model."""


@dataclass(frozen=True)
class NomaAllocation:
    P1: float
    P2: float
    R1: float
    R2: float
    N: int

    def __post_init__(self):
        if min(self.P1, self.P2, self.R1, self.R2) < 0:
            raise ValueError(f"powers and rates must be non-negative: {self}")
        if self.N < 1:
            raise ValueError("blocklength must be >= 1")


@dataclass(frozen=True)
class LinkErrorProfile:
    eps2_at_1: float
    eps1_sic: float
    eps1_nosic: float
    eps1_effective: float
    eps2_effective: float
    sic_branch: int


def q_function(x):
    """Standard normal tail probability ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def capacity(snr):
    """``log2(1 + snr)`` in bits per channel use."""
    return np.log1p(snr) / LN2


def dispersion_factor(snr):
    """``1 - (1 + snr)^-2``, written as ``snr (2 + snr) / (1 + snr)^2``.

    The rational form is free of cancellation for tiny SNR, where the direct
    difference loses every significant digit.
    """
    snr = np.asarray(snr, dtype=float)
    return snr * (2.0 + snr) / (1.0 + snr) ** 2


def dispersion_f(snr, N, R):
    """Normalised back-off ``ln2 * sqrt(N / V(snr)) * (log2(1 + snr) - R)``.

    At zero SNR the channel carries nothing: the value is ``-inf`` for any
    positive rate (error probability one) and the limit ``0`` when ``R = 0``.
    """
    snr = np.asarray(snr, dtype=float)
    R = np.asarray(R, dtype=float)
    if snr.size and snr.min() > 0.0:
        return LN2 * np.sqrt(N / dispersion_factor(snr)) * (capacity(snr) - R)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = LN2 * np.sqrt(N / dispersion_factor(snr)) * (capacity(snr) - R)
    f = np.where(snr <= 0.0, np.where(R > 0.0, -np.inf, 0.0), f)
    return f[()]


def error_prob(snr, N, R):
    """Block error probability ``Q(f(snr, N, R))``, clamped to ``[0, 1]``."""
    return np.clip(q_function(dispersion_f(snr, N, R)), 0.0, 1.0)


def sinr_set(gain1, gain2, P1, P2, noise1=1.0, noise2=1.0):
    """SINRs of the downlink: ``(g21, g11, g11_nosic, g22)``.

    ``g21``: user 2's message at user 1; ``g11``: user 1's message after
    cancellation; ``g11_nosic``: user 1's message with user 2's as noise;
    ``g22``: user 2's message at user 2.
    """
    s21 = gain1 * P2 / (gain1 * P1 + noise1)
    s11 = gain1 * P1 / noise1
    s11n = gain1 * P1 / (gain1 * P2 + noise1)
    s22 = gain2 * P2 / (gain2 * P1 + noise2)
    return s21, s11, s11n, s22


def effective_error_u1(s21, s11, s11n, N, R1, R2, rtol=1e-12):
    """Effective error probability of the core user and the branch used.

    If ``R1 <= log2(1 + s11n)`` user 1 can still decode its own message when
    SIC fails; otherwise a failed SIC is a lost packet. Rates above
    ``log2(1 + s11)`` are outside the model and raise :class:`DomainError`.
    """
    R1 = np.asarray(R1, dtype=float)
    c11 = capacity(s11)
    if np.any(R1 > c11 * (1.0 + rtol) + rtol):
        raise DomainError("R1 exceeds log2(1 + SNR) of the interference-free link")
    e21 = error_prob(s21, N, R2)
    e11 = error_prob(s11, N, R1)
    e11n = error_prob(s11n, N, R1)
    branch1 = R1 <= capacity(s11n)
    fallback = np.where(branch1, e11n, 1.0)
    eps = np.clip(e11 * (1.0 - e21) + fallback * e21, 0.0, 1.0)
    branch = np.where(branch1, BRANCH_NOSIC_DECODABLE, BRANCH_SIC_REQUIRED)
    return eps[()], branch[()]


def throughput(R, eps, share=1.0):
    """Effective throughput ``share * R * (1 - eps)``; ``share = N_i / N``."""
    return share * R * (1.0 - eps)


def link_errors(gain1, gain2, alloc: NomaAllocation, noise1=1.0, noise2=1.0
                ) -> LinkErrorProfile:
    s21, s11, s11n, s22 = sinr_set(gain1, gain2, alloc.P1, alloc.P2, noise1, noise2)
    eps1, branch = effective_error_u1(s21, s11, s11n, alloc.N, alloc.R1, alloc.R2)
    return LinkErrorProfile(
        eps2_at_1=float(error_prob(s21, alloc.N, alloc.R2)),
        eps1_sic=float(error_prob(s11, alloc.N, alloc.R1)),
        eps1_nosic=float(error_prob(s11n, alloc.N, alloc.R1)),
        eps1_effective=float(eps1),
        eps2_effective=float(error_prob(s22, alloc.N, alloc.R2)),
        sic_branch=int(branch),
    )


def throughput_pair(gain1, gain2, alloc: NomaAllocation, noise1=1.0, noise2=1.0
                    ) -> tuple[float, float]:
    """``(T1, T2)`` for a NOMA allocation; both users use the full block."""
    prof = link_errors(gain1, gain2, alloc, noise1, noise2)
    return (float(throughput(alloc.R1, prof.eps1_effective)),
            float(throughput(alloc.R2, prof.eps2_effective)))
