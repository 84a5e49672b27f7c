"""Next-hop selection and the Q-learning core.

Q-values are keyed by (holding node, candidate next hop). The update is a
Watkins-style Q(lambda): a replacing eligibility trace is set for the acting
pair, every traced pair absorbs the TD error, and the traces then decay by
beta*lambda after a greedy action or are cleared entirely after a non-greedy
one. With lambda = 0 this reduces exactly to one-step Q-learning.

The learning rate and discount can be recomputed per decision: the learning
rate from the chosen link's coverage probability through a logistic squashed
into [beta_min, beta_max], and the discount from the candidate-neighbor count
relative to the fleet size, scaled into [gamma_min, gamma_max].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Position, UavId, distance

NEIGHBOR_DISCOVERY = "neighbor_discovery"
RECEIVE = "receive"
TRANSMIT = "transmit"
CHARGE = "charge"

MODES = (NEIGHBOR_DISCOVERY, RECEIVE, TRANSMIT, CHARGE)

QTable = dict[tuple[UavId, UavId], float]
EligibilityTraces = dict[tuple[UavId, UavId], float]

_TRACE_FLOOR = 1e-12


@dataclass(frozen=True)
class RewardInputs:
    p_coll: float      # collision probability with the chosen next hop
    p_rs_l3: float     # own end-to-end ack ratio
    p_rs_l2: float     # own hop-level ack ratio
    p_cov: float       # coverage probability of the chosen link
    e_res_norm: float  # own residual energy, normalized over [0, e_full]
    n_h: int           # feasible candidate count at decision time


def compute_reward(inputs: RewardInputs,
                   weights: tuple[float, float, float, float, float]) -> float:
    """Weighted unit-interval reward; exactly 0 when no feasible candidate existed."""
    if inputs.n_h == 0:
        return 0.0
    for name in ("p_coll", "p_rs_l3", "p_rs_l2", "p_cov", "e_res_norm"):
        v = getattr(inputs, name)
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    w1, w2, w3, w4, w5 = weights
    return (w1 * (1.0 - inputs.p_coll) + w2 * inputs.p_rs_l3
            + w3 * inputs.p_rs_l2 + w4 * inputs.p_cov + w5 * inputs.e_res_norm)


def dynamic_learning_rate(p_cov: float, beta_min: float, beta_max: float,
                          variant: str = "inverted") -> float:
    """Logistic of the coverage probability scaled into [beta_min, beta_max].

    variant='inverted' (default) uses 1/(1+e^{+p_cov}) so well-covered links
    learn more cautiously; variant='literal' uses 1/(1+e^{-p_cov}).
    """
    if variant == "literal":
        frac = 1.0 / (1.0 + math.exp(-p_cov))
    elif variant == "inverted":
        frac = 1.0 / (1.0 + math.exp(p_cov))
    else:
        raise ValueError(f"unknown learning-rate variant {variant!r}")
    return frac * (beta_max - beta_min) + beta_min


def dynamic_discount(n_c: int, m_total: int,
                     gamma_min: float, gamma_max: float) -> float:
    """Candidate-count fraction scaled into [gamma_min, gamma_max]."""
    if m_total < 1:
        raise ValueError("m_total must be >= 1")
    frac = min(max(n_c, 0), m_total) / m_total
    return frac * (gamma_max - gamma_min) + gamma_min


def update_q(q: QTable, e: EligibilityTraces, node: UavId, action: UavId,
             reward: float, max_q_next: float, beta: float, gamma: float,
             lam: float, was_greedy: bool) -> tuple[QTable, EligibilityTraces]:
    """One Q(lambda) transition, applied in place.

    Order: TD error for (node, action); replacing trace set to 1 for that pair;
    every traced pair moves by beta * delta * trace; traces then decay by
    beta*lambda (greedy action) or are cleared (non-greedy action).
    """
    key = (node, action)
    delta = reward + gamma * max_q_next - q.get(key, 0.0)
    e[key] = min(e.get(key, 0.0) + 1.0, 1.0)
    for pair, trace in e.items():
        q[pair] = q.get(pair, 0.0) + beta * delta * trace
    if was_greedy:
        decay = beta * lam
        if decay > 0.0:
            stale = []
            for pair in e:
                e[pair] *= decay
                if e[pair] < _TRACE_FLOOR:
                    stale.append(pair)
            for pair in stale:
                del e[pair]
        else:
            e.clear()
    else:
        e.clear()
    return q, e


def max_outgoing_q(q: QTable, node: UavId, candidates: Iterable[UavId]) -> float:
    """Best Q among the node's current candidates; 0 with no candidates."""
    best = None
    for c in candidates:
        v = q.get((node, c), 0.0)
        if best is None or v > best:
            best = v
    return 0.0 if best is None else best


@dataclass(frozen=True)
class Candidate:
    """Everything select_next_hop needs to know about one table entry."""
    uav: UavId
    position: Position
    e_res: float       # hello-carried residual energy, J
    p_coll: float      # pairwise collision probability with the holder
    covered: bool      # deterministic link test (mean-fading SIR >= theta)


def filter_feasible(candidates: Sequence[Candidate], delta_th: float,
                    phi_th: float) -> list[Candidate]:
    """Keep candidates with enough energy, a covered link, and low collision risk."""
    return [c for c in candidates
            if c.e_res > delta_th and c.covered and c.p_coll < phi_th]


def _divergence(node_pos: Position, dst_pos: Position, cand_pos: Position) -> float:
    """Angle between the node->candidate step and the node->destination axis."""
    ax = dst_pos[0] - node_pos[0]
    ay = dst_pos[1] - node_pos[1]
    az = dst_pos[2] - node_pos[2]
    cx = cand_pos[0] - node_pos[0]
    cy = cand_pos[1] - node_pos[1]
    cz = cand_pos[2] - node_pos[2]
    na = math.sqrt(ax * ax + ay * ay + az * az)
    nc = math.sqrt(cx * cx + cy * cy + cz * cz)
    if na == 0.0 or nc == 0.0:
        return 0.0
    cosang = (ax * cx + ay * cy + az * cz) / (na * nc)
    return math.acos(min(1.0, max(-1.0, cosang)))


def select_next_hop(q: QTable, node: UavId, feasible: Sequence[Candidate],
                    node_pos: Position, dst_pos: Position,
                    rng: np.random.Generator | None = None,
                    epsilon: float = 0.0,
                    exclude: frozenset[UavId] | set[UavId] = frozenset(),
                    ) -> tuple[Candidate | None, bool]:
    """Pick the next hop among feasible candidates; returns (choice, was_greedy).

    Greedy choice is the max-Q candidate; exact Q ties fall to the smallest
    angular divergence from the node->destination axis, then the smaller id.
    With probability epsilon the choice is uniform instead (was_greedy is
    still True if the random pick happens to attain the max Q). Candidates in
    `exclude` (e.g. already on a packet's trail) are skipped.
    """
    pool = [c for c in feasible if c.uav not in exclude]
    if not pool:
        return None, True
    q_best = max(q.get((node, c.uav), 0.0) for c in pool)
    if epsilon > 0.0 and rng is not None and rng.random() < epsilon:
        chosen = pool[int(rng.integers(len(pool)))]
        return chosen, q.get((node, chosen.uav), 0.0) == q_best
    tied = [c for c in pool if q.get((node, c.uav), 0.0) == q_best]
    if len(tied) > 1:
        tied.sort(key=lambda c: (_divergence(node_pos, dst_pos, c.position), c.uav))
    return tied[0], True


def baseline_greedy(feasible: Sequence[Candidate],
                    dst_pos: Position,
                    exclude: frozenset[UavId] | set[UavId] = frozenset(),
                    ) -> Candidate | None:
    """Geographic baseline: the feasible candidate closest to the destination."""
    pool = [c for c in feasible if c.uav not in exclude]
    if not pool:
        return None
    return min(pool, key=lambda c: (distance(c.position, dst_pos), c.uav))


@dataclass(frozen=True)
class ModeEvents:
    e_res_below: bool    # residual energy under the relay threshold
    hello_due: bool      # hello timer fired
    table_empty: bool    # no candidate records at all
    has_tx: bool         # transmission queue non-empty
    has_rx: bool         # reception queue non-empty


def step_mode(current: str, events: ModeEvents) -> str:
    """One mode transition. Charge is sticky: only a completed charge cycle
    (handled by the engine, battery full) leaves it, back to discovery."""
    if current not in MODES:
        raise ValueError(f"unknown mode {current!r}")
    if current == CHARGE:
        return CHARGE
    if events.e_res_below:
        return CHARGE
    if events.hello_due or events.table_empty:
        return NEIGHBOR_DISCOVERY
    if current == NEIGHBOR_DISCOVERY:
        # discovery hands over to receive before any transmission happens
        return RECEIVE
    if events.has_tx and not events.has_rx:
        return TRANSMIT
    return RECEIVE
