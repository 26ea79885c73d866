"""Link SNRs of the aligned F - N - A relay topology and time-shared AWGN rates.

Distances are normalized so that F-A is 1, N-A is ``beta`` and F-N is
``1 - beta``.  Noise has unit variance, so ``power`` is directly the SNR of a
unit-distance link.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Slack for S <= T checks; shares are ratios of sums and can overshoot by an ulp.
SHARE_TOL = 1e-12


class Link(enum.Enum):
    FA = "F->A"
    FN = "F->N"
    NA = "N->A"


@dataclass(frozen=True)
class NetworkConfig:
    power: float
    beta: float
    gamma: float = 2.0
    sigma: float = 0.002

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be > 0, got {self.power!r}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma!r}")


def link_snr(config: NetworkConfig, link: Link) -> float:
    """Receive SNR on ``link`` when the sender spends its full average power."""
    if link is Link.FA:
        return config.power
    if link is Link.FN:
        return config.power / (1.0 - config.beta) ** config.gamma
    if link is Link.NA:
        return config.power / config.beta**config.gamma
    raise ValueError(f"unknown link {link!r}")


def awgn_rate(share, burst_fraction, snr):
    """Rate ``S * log2(1 + snr / T)`` of a node succeeding a fraction ``S`` of
    the time while transmitting a fraction ``T`` at burst power ``snr / T``.

    Works elementwise on numpy arrays.  A zero share gives zero rate even when
    ``T`` is zero.
    """
    s = np.asarray(share, dtype=float)
    t = np.asarray(burst_fraction, dtype=float)
    if np.any(s < 0) or np.any(t < 0) or np.any(t > 1 + SHARE_TOL):
        raise ValueError("shares must lie in [0, 1]")
    if np.any(s > t + SHARE_TOL):
        raise ValueError("successful share exceeds transmit share (S > T)")
    active = s > 0
    t_safe = np.where(active, t, 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = snr / t_safe
        # Subnormal bursts overflow snr / T; the log splits cleanly there.
        bits = np.where(np.isinf(ratio), np.log2(snr) - np.log2(t_safe), np.log2(1.0 + ratio))
        rate = np.where(active, s * bits, 0.0)
    if rate.ndim == 0:
        return float(rate)
    return rate
