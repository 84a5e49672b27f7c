"""Gauss-Markov motion in a confined cylinder.

Each node carries a (speed, direction, pitch) state that relaxes toward
per-node means with memory level alpha; the configured bands set the
spread of the zero-mean perturbation term. One call to step_gauss_markov
plus advance_position moves a node by one slot. Positions that leave the
arena radius are reflected back inside with the direction mean retargeted
at the center, and altitude is clamped to the operating band. Between
moves a node sits still for a uniformly drawn pause.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Position


@dataclass
class MobilityState:
    s: float            # speed, m/s
    d: float            # direction, rad
    p: float            # pitch, rad
    mean_s: float
    mean_d: float
    mean_p: float
    pause_slots: int = 0  # slots to sit still before the next move


def initial_state(rng: np.random.Generator,
                  v_band: tuple[float, float],
                  p_band: tuple[float, float]) -> MobilityState:
    """Assign per-node means; start at the means.

    Speed and pitch means come uniformly from their bands. The direction
    mean is uniform over the whole circle: a confined fleet must be
    isotropic, or every node shares a lateral drift and the flock piles up
    against one arc of the boundary.
    """
    s = rng.uniform(*v_band)
    d = rng.uniform(-math.pi, math.pi)
    p = rng.uniform(*p_band)
    return MobilityState(s=s, d=d, p=p, mean_s=s, mean_d=d, mean_p=p)


def _clamp(x: float, band: tuple[float, float]) -> float:
    return min(max(x, band[0]), band[1])


def step_gauss_markov(state: MobilityState, alpha: float,
                      rng: np.random.Generator,
                      v_band: tuple[float, float],
                      d_band: tuple[float, float],
                      p_band: tuple[float, float]) -> MobilityState:
    """Advance (s, d, p) one step.

    new = alpha * old + (1 - alpha) * mean + sqrt(1 - alpha^2) * u. The
    perturbation u is uniform over the band recentered on zero: each band
    sets the spread of the random term, not the admissible values, so the
    process keeps its mean at the per-node mean instead of drifting toward
    the band midpoint. Three rng draws per call in the fixed order speed,
    direction, pitch. Speed and pitch are clamped back into their bands;
    direction wraps freely so headings cover the full circle.
    """
    memory = math.sqrt(1.0 - alpha * alpha)
    u_s = rng.uniform(*v_band) - 0.5 * (v_band[0] + v_band[1])
    u_d = rng.uniform(*d_band) - 0.5 * (d_band[0] + d_band[1])
    u_p = rng.uniform(*p_band) - 0.5 * (p_band[0] + p_band[1])
    s = alpha * state.s + (1.0 - alpha) * state.mean_s + memory * u_s
    d = alpha * state.d + (1.0 - alpha) * state.mean_d + memory * u_d
    p = alpha * state.p + (1.0 - alpha) * state.mean_p + memory * u_p
    return MobilityState(
        s=_clamp(s, v_band), d=wrap_angle(d), p=_clamp(p, p_band),
        mean_s=state.mean_s, mean_d=state.mean_d, mean_p=state.mean_p,
        pause_slots=state.pause_slots,
    )


def wrap_angle(d: float) -> float:
    """Map an angle into (-pi, pi]."""
    wrapped = math.fmod(d + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def advance_position(pos: Position, state: MobilityState) -> Position:
    """Move one unit slot along the current heading."""
    x, y, h = pos
    return (
        x + state.s * math.cos(state.d) * math.cos(state.p),
        y + state.s * math.sin(state.d) * math.cos(state.p),
        h + state.s * math.sin(state.p),
    )


def apply_boundary(pos: Position, radius: float,
                   h_band: tuple[float, float]) -> Position:
    """Reflect radial overflow back inside the arena; clamp altitude."""
    x, y, h = pos
    rho = math.hypot(x, y)
    if rho > radius:
        rho_new = _clamp(2.0 * radius - rho, (0.0, radius))
        scale = rho_new / rho
        x, y = x * scale, y * scale
    return (x, y, _clamp(h, h_band))


def steer_inward(state: MobilityState, pos: Position,
                 radius: float, margin: float) -> None:
    """Point the direction mean at the arena center near the wall.

    Reflection alone keeps positions legal but leaves the mean heading
    aimed outward, so a node pins against the boundary until its mean
    decays. Retargeting the mean inside the margin turns wall contact
    into a smooth turn-back; away from the wall the mean is untouched.
    """
    x, y, _ = pos
    if math.hypot(x, y) >= radius - margin:
        state.mean_d = math.atan2(-y, -x)


def sample_pause(rng: np.random.Generator,
                 pause_band: tuple[float, float]) -> float:
    """Pause duration in seconds, uniform over the configured band."""
    return float(rng.uniform(*pause_band))
