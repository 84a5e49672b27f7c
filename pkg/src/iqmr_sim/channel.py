"""Air-to-air channel: distance path loss, Nakagami fading, SIR coverage.

The path-loss law takes the ground-projected link distance r and the
transmitter altitude h: l(r, h) = (r^2 + h^2)^(-alpha/2). Small-scale fading
power gains follow a Gamma(m, 1/m) law (unit mean) with the Nakagami shape m
derived from a Rician K factor. Coverage of a link is the probability that
its SIR clears a linear threshold, estimated by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class ChannelParams:
    path_loss_exponent: float = 2.0
    rician_k: float = 1.0
    nakagami_mapping: str = "printed"   # printed | standard
    theta_th: float = 1.0               # linear SIR threshold

    @property
    def m(self) -> float:
        return nakagami_m(self.rician_k, self.nakagami_mapping)


def path_loss(r: float, h: float, alpha: float = 2.0) -> float:
    """l(r, h) = (r^2 + h^2)^(-alpha/2); undefined at the singular point r = h = 0."""
    d2 = r * r + h * h
    if d2 == 0.0:
        raise ValueError("path loss undefined at r = h = 0")
    return d2 ** (-alpha / 2.0)


def nakagami_m(k: float, mapping: str = "printed") -> float:
    """Nakagami shape from a Rician K factor.

    mapping='printed' uses 2(K+1)/(2K+1); mapping='standard' uses the
    conventional (K+1)^2/(2K+1) form.
    """
    if k < 0:
        raise ValueError("rician K must be >= 0")
    if mapping == "printed":
        return 2.0 * (k + 1.0) / (2.0 * k + 1.0)
    if mapping == "standard":
        return (k + 1.0) ** 2 / (2.0 * k + 1.0)
    raise ValueError(f"unknown nakagami mapping {mapping!r}")


def sample_fading(m: float, rng: np.random.Generator, size=None):
    """Unit-mean fading power gain(s), Gamma distributed with shape m."""
    if m <= 0:
        raise ValueError("nakagami shape m must be positive")
    return rng.gamma(shape=m, scale=1.0 / m, size=size)


def sir(signal: float, interference: Sequence[float] | np.ndarray) -> float:
    """Signal-to-interference ratio; +inf when the interference sum is empty/zero."""
    total = float(np.sum(interference)) if len(interference) else 0.0
    if total == 0.0:
        return math.inf
    return signal / total


def geometric_sir(desired_rh: tuple[float, float],
                  interferer_rh: Sequence[tuple[float, float]],
                  alpha: float) -> float:
    """SIR with every fading gain at its mean (1.0): a deterministic link test."""
    signal = path_loss(desired_rh[0], desired_rh[1], alpha)
    return sir(signal, [path_loss(r, h, alpha) for r, h in interferer_rh])


def coverage_probability(desired_rh: tuple[float, float],
                         interferer_rh: Sequence[tuple[float, float]],
                         params: ChannelParams,
                         rng: np.random.Generator,
                         samples: int = 2000) -> float:
    """Monte Carlo estimate of P[SIR >= theta_th] for one link.

    An empty interferer set means an infinite SIR, so coverage is exactly 1.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    alpha = params.path_loss_exponent
    l0 = path_loss(desired_rh[0], desired_rh[1], alpha)
    if not interferer_rh:
        return 1.0
    losses = np.array([path_loss(r, h, alpha) for r, h in interferer_rh])
    m = params.m
    g = rng.gamma(shape=m, scale=1.0 / m, size=(samples, 1 + len(losses)))
    signal = g[:, 0] * l0
    interference = g[:, 1:] @ losses
    return float(np.mean(signal >= params.theta_th * interference))
