"""Neighbor discovery: hello broadcasts, the candidate table, hello scheduling.

A node keeps one record per heard neighbor, but only for neighbors inside its
candidate sector: within the transmission radius and not behind the node
relative to the destination (angle to the node-destination axis at most pi/2,
boundary inclusive). Records expire a fixed window after they were heard, so
every hello-carried quantity (energy, ack status, q_value) has bounded
staleness. Hello cadence follows the shortest link-sustenance time among the
current candidates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Position, UavId, distance


@dataclass(frozen=True)
class HelloMessage:
    origin: UavId
    location: Position
    e_res: float      # sender residual energy, J
    p_rs: float       # sender packet-reception status, [0, 2]
    beta: float       # sender's current learning rate
    gamma: float      # sender's current discount
    q_value: float    # sender's max outgoing Q (0 for the destination)
    issued_at: int    # slot index


@dataclass
class NeighborRecord:
    origin: UavId
    location: Position
    e_res: float
    p_rs: float
    beta: float
    gamma: float
    q_value: float
    heard_at: int


def in_candidate_sector(src: Position, dst: Position, cand: Position,
                        tx_radius: float) -> bool:
    """True when cand is within radio range of src and on the destination side.

    The destination side is the half-space whose boundary plane passes through
    src perpendicular to the src->dst axis; the boundary itself counts as in.
    """
    if distance(src, cand) > tx_radius:
        return False
    ax, ay, az = dst[0] - src[0], dst[1] - src[1], dst[2] - src[2]
    cx, cy, cz = cand[0] - src[0], cand[1] - src[1], cand[2] - src[2]
    return ax * cx + ay * cy + az * cz >= 0.0


class NeighborTable:
    """Candidate records of one node, keyed by neighbor id."""

    def __init__(self, expiry_slots: int):
        if expiry_slots < 1:
            raise ValueError("expiry_slots must be >= 1")
        self.expiry_slots = expiry_slots
        self.records: dict[UavId, NeighborRecord] = {}

    def __len__(self) -> int:
        return len(self.records)

    def candidates(self) -> list[UavId]:
        return sorted(self.records)

    def get(self, origin: UavId) -> NeighborRecord | None:
        return self.records.get(origin)

    def process_hello(self, hello: HelloMessage, owner_pos: Position,
                      dst_pos: Position, tx_radius: float) -> bool:
        """Insert or refresh a record; out-of-sector hellos leave the table unchanged."""
        if not in_candidate_sector(owner_pos, dst_pos, hello.location, tx_radius):
            return False
        self.records[hello.origin] = NeighborRecord(
            origin=hello.origin, location=hello.location, e_res=hello.e_res,
            p_rs=hello.p_rs, beta=hello.beta, gamma=hello.gamma,
            q_value=hello.q_value, heard_at=hello.issued_at,
        )
        return True

    def expire_records(self, now_slot: int) -> list[UavId]:
        """Drop records at or past the expiry boundary; returns the dropped ids."""
        gone = [o for o, rec in self.records.items()
                if now_slot - rec.heard_at >= self.expiry_slots]
        for o in gone:
            del self.records[o]
        return gone

    def drop(self, origin: UavId) -> None:
        self.records.pop(origin, None)


def schedule_next_hello(now_slot: int, t_lst_s: float | None,
                        slot_duration_s: float) -> int:
    """Next hello slot: now + t_lst (converted to slots, at least one slot ahead).

    A missing estimate (t_lst None) repeats the hello on the very next slot.
    """
    if t_lst_s is None:
        return now_slot + 1
    if t_lst_s < 0:
        raise ValueError("t_lst_s must be >= 0")
    return now_slot + max(1, round(t_lst_s / slot_duration_s))
