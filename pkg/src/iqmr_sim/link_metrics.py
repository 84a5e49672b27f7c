"""Per-link quality metrics: ack ratios, collision probability, link lifetime.

packet_reception_status sums the hop-level and end-to-end ack ratios of a
node's own transmissions, so it lives in [0, 2]. Collision probability is a
Gaussian-kernel function of pairwise distance with two variants: 'literal'
grows with distance, the default 'complement' decays with distance. Link
sustenance time estimates how long a neighbor stays usable given the current
radial relation of the pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

RECEDING = "receding"
APPROACHING = "approaching"
EQUIDISTANT = "equidistant"


@dataclass
class PacketCounters:
    pac_tx_l2: int = 0   # hop-level data transmissions by this node
    ack_l2: int = 0      # hop-level acks received back
    pac_tx_l3: int = 0   # transmissions participating in end-to-end attempts
    ack_l3: int = 0      # end-to-end acks received back

    def ratio_l2(self) -> float:
        return self.ack_l2 / self.pac_tx_l2 if self.pac_tx_l2 else 0.0

    def ratio_l3(self) -> float:
        return self.ack_l3 / self.pac_tx_l3 if self.pac_tx_l3 else 0.0


def packet_reception_status(counters: PacketCounters) -> float:
    """ack_l2/pac_tx_l2 + ack_l3/pac_tx_l3, each term 0 when its denominator is 0."""
    return counters.ratio_l2() + counters.ratio_l3()


def collision_probability(r_m: float, xi_x: float, xi_y: float,
                          variant: str = "complement") -> float:
    """Pairwise collision probability at separation r.

    variant='literal': 1 - exp(-r^2 / (2 xi_x xi_y)), increasing with r;
    variant='complement' (default): exp(-r^2 / (2 xi_x xi_y)), so closer
    pairs are the risky ones.
    """
    if r_m < 0:
        raise ValueError("r_m must be >= 0")
    if xi_x <= 0 or xi_y <= 0:
        raise ValueError("xi_x and xi_y must be positive")
    core = math.exp(-(r_m * r_m) / (2.0 * xi_x * xi_y))
    if variant == "literal":
        return 1.0 - core
    if variant == "complement":
        return core
    raise ValueError(f"unknown collision variant {variant!r}")


def classify_relation(d_prev: float, d_now: float) -> str:
    """Radial relation of a pair from the sign of the distance change."""
    if d_now > d_prev:
        return RECEDING
    if d_now < d_prev:
        return APPROACHING
    return EQUIDISTANT


def link_sustenance_time(d_m: float, s_i: float, s_j: float,
                         relation: str, tx_radius_m: float) -> float | None:
    """Seconds until the link plausibly breaks; None when no estimate exists.

    Receding pairs break by leaving the transmission radius; approaching pairs
    by closing the gap. Equidistant pairs, and approaching pairs with equal
    speeds, give no finite estimate.
    """
    if relation == RECEDING:
        if s_i + s_j == 0:
            return None
        return abs((tx_radius_m - d_m) / (s_i + s_j))
    if relation == APPROACHING:
        if s_i == s_j:
            return None
        return d_m / abs(s_i - s_j)
    if relation == EQUIDISTANT:
        return None
    raise ValueError(f"unknown relation {relation!r}")
