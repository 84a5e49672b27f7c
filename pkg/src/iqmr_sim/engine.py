"""Slot-stepped network engine.

One episode is one slot of network-wide operation. Each slot runs fixed
phases in a fixed node order (ascending id), so a run is a pure function of
its config and seed:

  1. scenario injection (fragmentation out/in, forced energy depletion)
  2. forced relocations queued by last slot's collision-constraint violations
  3. constant-bit-rate traffic admission (round-robin over active sources)
  4. mobility (paused nodes sit still; movers take one confined step)
  5. flight energy for every airborne node, then charge-cycle ticking
  6. neighbor-record expiry
  7. mode transitions
  8. hello phase: discovery-mode nodes broadcast; receivers sector-filter
  9. transmit phase: constraint filtering, next-hop choice, SIR delivery,
     ack bookkeeping, reward and Q-update
 10. receive phase: reception queues drain into transmission queues

The ground station is node id 0: static at the arena center at ground level,
always-feasible energy, terminal q_value 0. Delivering to id 0 completes a
packet and triggers the end-to-end ack cascade back along the hop trail.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import link_metrics, mobility, routing
from .channel import ChannelParams, coverage_probability, geometric_sir, path_loss
from .core import ConfigError, Position, SimConfig, UavId, distance, horizontal_distance, normalize
from .energy import EnergyState, fly_energy_joules, start_charge, tick_charge, tx_energy, update_residual
from .link_metrics import PacketCounters, classify_relation, collision_probability, link_sustenance_time, packet_reception_status
from .neighbors import HelloMessage, NeighborTable, schedule_next_hello
from .routing import Candidate, ModeEvents, RewardInputs

GCS = 0
GCS_POS: Position = (0.0, 0.0, 0.0)


@dataclass
class Packet:
    pid: int
    source: UavId
    created_at: int
    size_bytes: int
    kind: str = "data"            # data | ack_l2 | ack_l3 | hello
    hops: int = 0                 # transmission attempts so far
    trail: list[UavId] = field(default_factory=list)  # custody chain, acyclic


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "none"
    selection: str = "random"
    fraction: float = 0.2
    start_slot: int = 0
    duration_slots: int = 0
    rejoin: str = "all_at_once"
    rejoin_window_slots: int = 1
    depletion_j: float = 100.0

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "ScenarioSpec":
        return cls(
            kind=cfg.scenario_kind,
            selection=cfg.scenario_selection,
            fraction=cfg.scenario_fraction,
            start_slot=cfg.scenario_start_slot,
            duration_slots=cfg.slots(cfg.scenario_duration_ms / 1000.0),
            rejoin=cfg.scenario_rejoin,
            rejoin_window_slots=cfg.slots(cfg.scenario_rejoin_window_ms / 1000.0),
            depletion_j=cfg.scenario_depletion_j,
        )


@dataclass
class EpisodeMetrics:
    episode: int
    reward: float
    cumulative_reward: float
    total_residual_j: float
    l3_delivered: int
    l3_delivered_cum: int
    ack_l2_total: int
    ack_l3_total: int
    pac_tx_l2_total: int
    pac_tx_l3_total: int
    active_nodes: int
    fragmented: int
    decisions: int
    n_h_zero: int
    dropped_cum: int
    queued_total: int
    p_coll_sum: float     # chosen-link collision probability, summed over transmissions
    p_cov_sum: float      # chosen-link coverage probability, summed over transmissions


class TrafficSource:
    """Deterministic CBR admission: fractional packets accumulate across slots."""

    def __init__(self, rate_bps: float, packet_size_bytes: int,
                 slot_duration_s: float):
        self.per_slot = rate_bps * slot_duration_s / (8.0 * packet_size_bytes)
        self.size = packet_size_bytes
        self.carry = 0.0
        self.next_pid = 0
        self._rr = 0

    def generate(self, slot: int, sources: list[UavId]) -> list[Packet]:
        if not sources:
            return []
        self.carry += self.per_slot
        n = int(self.carry)
        self.carry -= n
        out = []
        for _ in range(n):
            src = sources[self._rr % len(sources)]
            self._rr += 1
            out.append(Packet(pid=self.next_pid, source=src, created_at=slot,
                              size_bytes=self.size))
            self.next_pid += 1
        return out


@dataclass
class Uav:
    uid: UavId
    pos: Position
    mob: mobility.MobilityState
    energy: EnergyState
    counters: PacketCounters = field(default_factory=PacketCounters)
    table: NeighborTable = None
    q_r: deque = field(default_factory=deque)
    q_t: deque = field(default_factory=deque)
    mode: str = routing.NEIGHBOR_DISCOVERY
    active: bool = True               # False while fragmented out of the network
    rejoin_slot: int | None = None
    next_hello: int = 0
    last_hello: int = -(10 ** 9)
    last_beta: float = 0.0
    last_gamma: float = 0.0

    @property
    def relaying(self) -> bool:
        return self.active and not self.energy.charging


class World:
    def __init__(self, cfg: SimConfig, trace: bool = False):
        cfg.validate()
        if cfg.scenario_kind == "sweep":
            raise ConfigError(
                "sweep configs describe a run family; expand them first "
                "(presets.expand_sweep or the command line)")
        self.cfg = cfg
        # separate streams per concern, so runs differing only in policy or a
        # swept scalar share the same flight paths, pauses and traffic; one
        # shared stream would let a single extra draw reshuffle the world
        seq = np.random.SeedSequence(cfg.seed)
        decisions_ss, channel_ss, scenario_ss = seq.spawn(3)
        self.rng = np.random.default_rng(decisions_ss)
        self.rng_channel = np.random.default_rng(channel_ss)
        self.rng_scenario = np.random.default_rng(scenario_ss)
        self._node_rng = {uid: np.random.default_rng(s)
                          for uid, s in enumerate(seq.spawn(cfg.m), start=1)}
        self.channel = ChannelParams(
            path_loss_exponent=cfg.path_loss_exponent, rician_k=cfg.rician_k,
            nakagami_mapping=cfg.nakagami_mapping, theta_th=cfg.theta_th_linear)
        self.scenario = ScenarioSpec.from_config(cfg)
        self.traffic = TrafficSource(cfg.cbr_rate_bps, cfg.packet_size_bytes,
                                     cfg.slot_duration_s)
        self.slot = 0
        self.q: routing.QTable = {}
        self.traces: routing.EligibilityTraces = {}
        self.events: list[tuple] | None = [] if trace else None
        self.pending_relocate: set[UavId] = set()
        self.prev_transmitters: list[UavId] = []
        self.metrics: list[EpisodeMetrics] = []
        self.energy_audit: dict[str, float] = {}
        self._cum_reward = 0.0
        self._cum_l3 = 0
        self._cum_dropped = 0
        self.expiry_slots = cfg.slots(cfg.hello_expiry_ms / 1000.0)
        # the sustenance estimate vanishes for pairs sitting at the radius
        # edge, and a broadcast costs full-radius amplifier energy, so the
        # adaptive interval gets a floor as well as the expiry cap
        self.hello_min_slots = max(1, round(
            cfg.hello_min_ms / 1000.0 / cfg.slot_duration_s))
        self.gcs_next_hello = 0
        # the sink advertises a fixed value: the absorbing end of every
        # route.  The supremum any circulating chain of sub-unit rewards can
        # reach is 1/(1 - gamma_high), so advertising exactly that keeps a
        # hop into the sink weakly above every loop (strictly, once the
        # carried trail forbids revisits), while staying small enough that
        # the per-link reward structure is not drowned by the bootstrap
        if cfg.dynamic_gamma and cfg.policy == "iqmr":
            gamma_high = cfg.gamma_max
        else:
            gamma_high = cfg.gamma_fixed
        self.sink_value = 1.0 / (1.0 - gamma_high)
        self.v_mean = 0.5 * (cfg.v_min_mps + cfg.v_max_mps)
        self.fly_slot_j = fly_energy_joules(
            cfg.payload_kg, cfg.slot_duration_s,
            eps_payload=cfg.eps_payload_kw_per_kg, eps_hover=cfg.eps_hover_w,
            eps_density=cfg.eps_density_kj_per_kg)
        self.nodes: dict[UavId, Uav] = {}
        for uid in range(1, cfg.m + 1):
            nrng = self._node_rng[uid]
            pos = self._random_position(nrng)
            mob = mobility.initial_state(nrng, (cfg.v_min_mps, cfg.v_max_mps),
                                         (cfg.pitch_min_rad, cfg.pitch_max_rad))
            es = EnergyState(e_res=cfg.e_full_j, e_full=cfg.e_full_j)
            # instantaneous placement, but the climb from the ground point is paid for
            tau = distance(GCS_POS, pos) / self.v_mean
            self._drain(es, self._fly_j(tau), "deploy")
            # initial hello phases are spread across one expiry window so the
            # periodic refreshes interleave instead of colliding in lockstep
            first_hello = ((uid - 1) * self.expiry_slots) // max(1, cfg.m)
            self.nodes[uid] = Uav(uid=uid, pos=pos, mob=mob, energy=es,
                                  table=NeighborTable(self.expiry_slots),
                                  next_hello=first_hello)
        self._prev_pos: dict[UavId, Position] = {u.uid: u.pos for u in self.nodes.values()}

    # -- helpers ---------------------------------------------------------

    def _random_position(self, rng: np.random.Generator) -> Position:
        c = self.cfg
        rho = c.radius_m * math.sqrt(rng.uniform())
        ang = rng.uniform(0.0, 2.0 * math.pi)
        h = rng.uniform(c.h_min_m, c.h_max_m)
        return (rho * math.cos(ang), rho * math.sin(ang), h)

    def _fly_j(self, tau_s: float) -> float:
        c = self.cfg
        return fly_energy_joules(c.payload_kg, tau_s,
                                 eps_payload=c.eps_payload_kw_per_kg,
                                 eps_hover=c.eps_hover_w,
                                 eps_density=c.eps_density_kj_per_kg)

    def _tx_j(self, k_bits: float, r_m: float) -> float:
        c = self.cfg
        return tx_energy(k_bits, r_m, eps_elec=c.eps_elec_j_per_bit,
                         eps_fs=c.eps_amp_fs_j_per_bit_m2,
                         eps_mp=c.eps_amp_mp_j_per_bit_m4, r0_m=c.r0_m)

    def _event(self, kind: str, node: UavId, peer: UavId = -1, value: float = 0.0):
        if self.events is not None:
            self.events.append((self.slot, kind, node, peer, value))

    def node_position(self, uid: UavId) -> Position:
        return GCS_POS if uid == GCS else self.nodes[uid].pos

    def _receivable(self, uid: UavId) -> bool:
        return uid == GCS or (uid in self.nodes and self.nodes[uid].relaying)

    def _drain(self, es: EnergyState, joules: float, cause: str):
        """All battery draw funnels through here, itemized for audits."""
        update_residual(es, joules)
        self.energy_audit[cause] = self.energy_audit.get(cause, 0.0) + joules

    def max_outgoing_q(self, uid: UavId) -> float:
        return routing.max_outgoing_q(self.q, uid, self.nodes[uid].table.candidates())

    def _interferer_rh(self, rx_pos: Position, transmitters: list[UavId],
                       exclude: tuple[UavId, UavId]) -> list[tuple[float, float]]:
        """(r, h) of every interfering transmitter as seen at rx_pos."""
        if self.cfg.interference == "all":
            pool = [u.uid for u in self.nodes.values() if u.relaying]
        else:
            # one slot of lag means a pool member may have left the air since
            pool = [x for x in transmitters if self.nodes[x].relaying]
        out = []
        for x in pool:
            if x in exclude:
                continue
            p = self.node_position(x)
            out.append((horizontal_distance(p, rx_pos), p[2]))
        return out

    def _sir_sample(self, tx_pos: Position, rx_pos: Position,
                    interferer_rh: list[tuple[float, float]]) -> float:
        alpha = self.cfg.path_loss_exponent
        m = self.channel.m
        g = self.rng_channel.gamma(shape=m, scale=1.0 / m,
                                   size=1 + len(interferer_rh))
        # the loss model keys on the transmitter's operating height; for the
        # one transmitter that sits on the ground (the station acking back
        # up), the receiver's height carries the same link geometry
        vert = tx_pos[2] if tx_pos[2] > 0.0 else rx_pos[2]
        signal = g[0] * path_loss(horizontal_distance(tx_pos, rx_pos), vert, alpha)
        interference = [g[1 + i] * path_loss(r, h, alpha)
                        for i, (r, h) in enumerate(interferer_rh)]
        total = sum(interference)
        return math.inf if total == 0.0 else signal / total

    # -- scenario injection ----------------------------------------------

    def _select_nodes(self, fraction: float, selection: str) -> list[UavId]:
        eligible = sorted(u.uid for u in self.nodes.values() if u.relaying)
        k = round(fraction * len(eligible))
        if k <= 0:
            return []
        if selection == "random":
            picked = self.rng_scenario.choice(eligible, size=k, replace=False)
            return sorted(int(x) for x in picked)
        keyed = sorted(eligible, key=lambda uid: (-self.max_outgoing_q(uid), uid))
        if selection == "top_q":
            return sorted(keyed[:k])
        if selection == "bottom_q":
            return sorted(keyed[-k:])
        raise ConfigError(f"unknown scenario selection {selection!r}")

    def inject_fragmentation(self, spec: ScenarioSpec) -> list[UavId]:
        picked = self._select_nodes(spec.fraction, spec.selection)
        if not picked:
            warnings.warn("fragmentation selected no nodes; scenario is a no-op")
            return []
        back = self.slot + spec.duration_slots
        for i, uid in enumerate(picked):
            u = self.nodes[uid]
            u.active = False
            if spec.rejoin == "staggered" and len(picked) > 1:
                u.rejoin_slot = back + (i * spec.rejoin_window_slots) // len(picked)
            else:
                u.rejoin_slot = back
            self._event("frag_out", uid, value=u.rejoin_slot)
        return picked

    def inject_depletion(self, spec: ScenarioSpec) -> list[UavId]:
        picked = self._select_nodes(spec.fraction, spec.selection)
        if not picked:
            warnings.warn("depletion selected no nodes; scenario is a no-op")
            return []
        for uid in picked:
            es = self.nodes[uid].energy
            if es.e_res > spec.depletion_j:
                self._drain(es, es.e_res - spec.depletion_j, "scenario")
            self._event("deplete", uid, value=es.e_res)
        return picked

    # -- slot phases -----------------------------------------------------

    def _phase_scenario(self):
        s = self.scenario
        if s.kind == "fragmentation" and self.slot == s.start_slot:
            self.inject_fragmentation(s)
        elif s.kind == "energy_depletion" and self.slot == s.start_slot:
            self.inject_depletion(s)
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if not u.active and u.rejoin_slot is not None and self.slot >= u.rejoin_slot:
                u.active = True
                u.rejoin_slot = None
                u.next_hello = self.slot   # rediscover immediately
                self._event("frag_in", uid)

    def _phase_relocations(self):
        c = self.cfg
        # the random evasive hop is local: three deviation radii puts the
        # pairwise risk around 1e-4, well under any sane phi_th, while
        # keeping the detour cheap enough that evasions stay a footnote in
        # the energy ledger
        reach = 3.0 * math.sqrt(2.0 * c.xi_x_m * c.xi_y_m)
        for uid in sorted(self.pending_relocate):
            u = self.nodes.get(uid)
            if u is None or not u.relaying:
                continue
            nrng = self._node_rng[uid]
            azimuth = nrng.uniform(0.0, 2.0 * math.pi)
            hop = nrng.uniform(0.5 * reach, reach)
            new_pos = mobility.apply_boundary(
                (u.pos[0] + hop * math.cos(azimuth),
                 u.pos[1] + hop * math.sin(azimuth), u.pos[2]),
                c.radius_m, (c.h_min_m, c.h_max_m))
            tau = distance(u.pos, new_pos) / self.v_mean
            self._drain(u.energy, self._fly_j(tau), "relocate")
            u.pos = new_pos
            u.mob.pause_slots = 0
            self._event("relocate", uid)
        self.pending_relocate.clear()

    def _phase_traffic(self):
        sources = [uid for uid in sorted(self.nodes) if self.nodes[uid].relaying]
        for pkt in self.traffic.generate(self.slot, sources):
            self.nodes[pkt.source].q_t.append(pkt)

    def _phase_mobility(self):
        c = self.cfg
        self._prev_pos = {uid: self.nodes[uid].pos for uid in self.nodes}
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if u.energy.charging:
                continue
            if u.mob.pause_slots > 0:
                u.mob.pause_slots -= 1
                continue
            nrng = self._node_rng[uid]
            u.mob = mobility.step_gauss_markov(
                u.mob, c.gmm_alpha, nrng, (c.v_min_mps, c.v_max_mps),
                (c.d_min_rad, c.d_max_rad), (c.pitch_min_rad, c.pitch_max_rad))
            u.pos = mobility.apply_boundary(
                mobility.advance_position(u.pos, u.mob), c.radius_m,
                (c.h_min_m, c.h_max_m))
            # one max-speed step of margin: a node brushing the wall turns
            # back over a few slots instead of grinding along the rim
            mobility.steer_inward(u.mob, u.pos, c.radius_m, c.v_max_mps)
            # pause elapses on the mobility clock: one unit tick per slot,
            # matching the unit-sampled motion step above
            u.mob.pause_slots = max(0, round(
                mobility.sample_pause(nrng, (c.pause_min_s, c.pause_max_s))))

    def _phase_energy_and_charge(self):
        c = self.cfg
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if u.energy.charging:
                if tick_charge(u.energy, c.slot_duration_s, c.t_charge_s):
                    # back in service: full battery, fresh base, rediscovery
                    nrng = self._node_rng[uid]
                    u.pos = self._random_position(nrng)
                    u.mob = mobility.initial_state(
                        nrng, (c.v_min_mps, c.v_max_mps),
                        (c.pitch_min_rad, c.pitch_max_rad))
                    u.table.records.clear()
                    u.mode = routing.NEIGHBOR_DISCOVERY
                    u.next_hello = self.slot + 1
                    self._event("charge_end", uid)
            else:
                self._drain(u.energy, self.fly_slot_j, "propulsion")

    def _phase_expiry(self):
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if not u.active:
                continue
            for gone in u.table.expire_records(self.slot):
                self._event("expire", uid, gone)

    def _enter_charge(self, u: Uav):
        dropped = len(u.q_r) + len(u.q_t)
        self._cum_dropped += dropped
        u.q_r.clear()
        u.q_t.clear()
        tau = distance(u.pos, GCS_POS) / self.v_mean
        self._drain(u.energy, self._fly_j(tau), "return_to_base")
        u.pos = GCS_POS
        start_charge(u.energy)
        u.mode = routing.CHARGE
        self._event("charge_start", u.uid, value=dropped)

    def _phase_modes(self):
        c = self.cfg
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if not u.active or u.energy.charging:
                continue
            ev = ModeEvents(
                e_res_below=u.energy.e_res < c.delta_th_j,
                hello_due=self.slot >= u.next_hello,
                table_empty=len(u.table) == 0,
                has_tx=bool(u.q_t), has_rx=bool(u.q_r))
            new_mode = routing.step_mode(u.mode, ev)
            if new_mode == routing.CHARGE:
                self._enter_charge(u)
            else:
                u.mode = new_mode

    def _hello_of(self, uid: UavId) -> HelloMessage:
        if uid == GCS:
            return HelloMessage(origin=GCS, location=GCS_POS,
                                e_res=self.cfg.e_full_j, p_rs=0.0, beta=0.0,
                                gamma=0.0, q_value=self.sink_value,
                                issued_at=self.slot)
        u = self.nodes[uid]
        return HelloMessage(
            origin=uid, location=u.pos, e_res=u.energy.e_res,
            p_rs=packet_reception_status(u.counters), beta=u.last_beta,
            gamma=u.last_gamma, q_value=self.max_outgoing_q(uid),
            issued_at=self.slot)

    def _schedule_hello(self, u: Uav):
        """Next hello from the shortest link-sustenance time among candidates.

        Pairs with no observed relative motion give no estimate; if nothing
        does, refresh one slot before records would expire. A pair observed
        equidistant while actually moving repeats the hello immediately.
        """
        c = self.cfg
        estimates: list[float] = []
        repeat_now = False
        for cid in u.table.candidates():
            if cid == GCS:
                peer_pos, peer_speed, peer_prev = GCS_POS, 0.0, GCS_POS
            elif cid in self.nodes:
                peer = self.nodes[cid]
                peer_pos, peer_speed = peer.pos, peer.mob.s
                peer_prev = self._prev_pos.get(cid, peer.pos)
            else:
                continue
            d_prev = distance(self._prev_pos.get(u.uid, u.pos), peer_prev)
            d_now = distance(u.pos, peer_pos)
            rel = classify_relation(d_prev, d_now)
            if rel == link_metrics.EQUIDISTANT:
                moved = (u.pos != self._prev_pos.get(u.uid, u.pos)
                         or peer_pos != peer_prev)
                if moved:
                    repeat_now = True
                continue
            t = link_sustenance_time(d_now, u.mob.s, peer_speed, rel, c.tx_radius_m)
            if t is not None:
                estimates.append(t)
        if repeat_now:
            nxt = self.slot + 1
        elif estimates:
            nxt = schedule_next_hello(self.slot, min(estimates), c.slot_duration_s)
        else:
            # no motion estimate (static or empty neighborhood): refresh one
            # slot before records of this node would expire elsewhere
            nxt = self.slot + max(1, self.expiry_slots - 1)
        lo = self.slot + self.hello_min_slots
        hi = self.slot + max(1, self.expiry_slots - 1)
        u.next_hello = min(max(nxt, lo), hi)

    def _phase_hello(self):
        c = self.cfg
        senders: list[UavId] = []
        if self.slot >= self.gcs_next_hello:
            senders.append(GCS)
            self.gcs_next_hello = self.slot + max(1, self.expiry_slots - 1)
        # discovery mode services the hello plane, but only a due timer
        # triggers a broadcast; an early broadcast could not fill the
        # sender's own table anyway
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if (u.relaying and u.mode == routing.NEIGHBOR_DISCOVERY
                    and self.slot >= u.next_hello):
                senders.append(uid)
        hello_bits = c.hello_bytes * 8
        for uid in senders:
            hello = self._hello_of(uid)
            if uid != GCS:
                self._drain(self.nodes[uid].energy,
                            self._tx_j(hello_bits, c.tx_radius_m), "hello")
                self.nodes[uid].last_hello = self.slot
            self._event("hello_tx", uid)
            for rid in sorted(self.nodes):
                r = self.nodes[rid]
                if rid == uid or not r.relaying:
                    continue
                # the ground-station beacon is out of band: it neither suffers
                # nor causes relay hello contention
                if not c.hello_ideal and uid != GCS:
                    rh = []
                    for other in senders:
                        if other in (uid, rid) or other == GCS:
                            continue
                        p = self.node_position(other)
                        rh.append((horizontal_distance(p, r.pos), p[2]))
                    if self._sir_sample(self.node_position(uid), r.pos, rh) < c.theta_th_linear:
                        continue
                fresh = r.table.get(uid) is None
                if r.table.process_hello(hello, r.pos, GCS_POS, c.tx_radius_m):
                    self._event("hello_rx", rid, uid)
                    if fresh and c.policy != "greedy":
                        self._seed_q(r, uid, hello.q_value)
        for uid in senders:
            if uid != GCS:
                self._schedule_hello(self.nodes[uid])

    def _seed_q(self, r: Uav, origin: UavId, adv_q: float):
        """A record entering the table (re)initializes the owner's Q toward its
        origin from the advertised value: the one-step backup with the reward
        term left for live updates to fill in.  Without it a never-tried or
        expired-and-returned neighbor sits at 0 and pure-greedy selection can
        never discover it; with it the advertised value field does the early
        routing and experience refines it."""
        c = self.cfg
        if c.policy == "iqmr" and c.dynamic_gamma:
            gamma = routing.dynamic_discount(len(r.table.records), c.m,
                                             c.gamma_min, c.gamma_max)
        else:
            gamma = c.gamma_fixed
        self.q[(r.uid, origin)] = gamma * adv_q

    def _candidates_of(self, u: Uav, transmitters: list[UavId]) -> list[Candidate]:
        c = self.cfg
        out = []
        for cid in u.table.candidates():
            rec = u.table.get(cid)
            rx_pt = rec.location
            rh = self._interferer_rh(rx_pt, transmitters, exclude=(u.uid, cid))
            covered = geometric_sir(
                (horizontal_distance(u.pos, rx_pt), u.pos[2]), rh,
                c.path_loss_exponent) >= c.theta_th_linear
            if cid == GCS:
                p_coll = 0.0   # the ground station is not a mid-air collision risk
            else:
                p_coll = collision_probability(
                    distance(u.pos, rx_pt), c.xi_x_m, c.xi_y_m, c.collision_variant)
            out.append(Candidate(uav=cid, position=rx_pt, e_res=rec.e_res,
                                 p_coll=p_coll, covered=covered))
        return out

    def _l3_ack_cascade(self, trail: list[UavId], transmitters: list[UavId]):
        c = self.cfg
        ack_bits = c.ack_bytes * 8
        sender: UavId = GCS
        for hop in reversed(trail):
            if not self._receivable(hop):
                break
            s_pos = self.node_position(sender)
            h_pos = self.node_position(hop)
            if sender != GCS:
                self._drain(self.nodes[sender].energy,
                            self._tx_j(ack_bits, distance(s_pos, h_pos)), "ack")
            rh = self._interferer_rh(h_pos, transmitters, exclude=(sender, hop))
            if self._sir_sample(s_pos, h_pos, rh) < c.theta_th_linear:
                break
            self.nodes[hop].counters.ack_l3 += 1
            self._event("l3_ack", hop, sender)
            sender = hop

    def _phase_transmit(self) -> tuple[float, int, int, int, float, float]:
        c = self.cfg
        # interference is the channel occupancy one slot back: nodes that
        # actually radiated, known before anyone decides this slot (a
        # same-slot pool would need intents nobody has committed to yet)
        transmitters = self.prev_transmitters
        attempting = [uid for uid in sorted(self.nodes)
                      if self.nodes[uid].relaying
                      and self.nodes[uid].mode == routing.TRANSMIT
                      and self.nodes[uid].q_t]
        reward_sum, decisions, n_h_zero, l3_delivered = 0.0, 0, 0, 0
        p_coll_sum, p_cov_sum = 0.0, 0.0
        radiated: list[UavId] = []
        for uid in attempting:
            u = self.nodes[uid]
            pkt = u.q_t.popleft()
            if pkt.hops >= c.hop_cap_effective:
                self._cum_dropped += 1
                self._event("drop", uid, value=pkt.pid)
                continue
            cands = self._candidates_of(u, transmitters)
            for cand in cands:
                if cand.uav != GCS and not (cand.p_coll < c.phi_th):
                    self.pending_relocate.add(cand.uav)
            feasible = routing.filter_feasible(cands, c.delta_th_j, c.phi_th)
            n_h = len(feasible)
            decisions += 1
            if n_h == 0:
                n_h_zero += 1
                u.q_t.append(pkt)   # rotate: packets behind it have other trails
                # pull the next refresh forward, but never under the floor:
                # an empty feasible set usually means the filter is rejecting,
                # not that the table is stale, so re-advertising every slot
                # burns amplifier energy without unblocking anything
                u.next_hello = min(u.next_hello, max(
                    self.slot + 1, u.last_hello + self.hello_min_slots))
                self._event("decision", uid, value=0.0)
                continue
            # no revisits: the carried trail (already needed for the ack
            # cascade) doubles as loop memory.  Value-field loops then cost
            # waiting time instead of hop budget, and the cap is left to
            # bound only genuine per-link retries
            exclude = frozenset(pkt.trail)
            if c.policy == "greedy":
                chosen = routing.baseline_greedy(feasible, GCS_POS, exclude)
                was_greedy = True
            else:
                chosen, was_greedy = routing.select_next_hop(
                    self.q, uid, feasible, u.pos, GCS_POS, self.rng,
                    c.epsilon, exclude)
            if chosen is None:
                u.q_t.append(pkt)   # only the reverse hop is open: wait out the topology
                continue
            rx = chosen.uav
            # the amplifier is sized for the last reported candidate location
            r_link = distance(u.pos, chosen.position)
            self._drain(u.energy, self._tx_j(pkt.size_bytes * 8, r_link), "tx")
            u.counters.pac_tx_l2 += 1
            u.counters.pac_tx_l3 += 1
            radiated.append(uid)
            pkt.hops += 1
            if not pkt.trail or pkt.trail[-1] != uid:
                pkt.trail.append(uid)
            self._event("tx", uid, rx, pkt.pid)

            rx_pos = self.node_position(rx)
            rh_true = self._interferer_rh(rx_pos, transmitters, exclude=(uid, rx))
            delivered = (self._receivable(rx)
                         and self._sir_sample(u.pos, rx_pos, rh_true) >= c.theta_th_linear)
            if delivered:
                u.counters.ack_l2 += 1
                self._event("l2_ack", uid, rx)
                if rx == GCS:
                    l3_delivered += 1
                    self._event("deliver", uid, rx, pkt.pid)
                    if c.l3_acks:
                        self._l3_ack_cascade(pkt.trail, transmitters)
                else:
                    self.nodes[rx].q_r.append(pkt)
            else:
                if pkt.hops >= c.hop_cap_effective:
                    self._cum_dropped += 1
                    self._event("drop", uid, value=pkt.pid)
                else:
                    u.q_t.append(pkt)

            # reward and learning, with counters reflecting this slot's outcome
            rec = u.table.get(rx)
            rh_decision = self._interferer_rh(chosen.position, transmitters,
                                              exclude=(uid, rx))
            p_cov = coverage_probability(
                (horizontal_distance(u.pos, chosen.position), u.pos[2]),
                rh_decision, self.channel, self.rng, c.mc_samples)
            inputs = RewardInputs(
                p_coll=chosen.p_coll,
                p_rs_l3=u.counters.ratio_l3(),
                p_rs_l2=u.counters.ratio_l2(),
                p_cov=p_cov,
                e_res_norm=normalize(u.energy.e_res, (0.0, c.e_full_j)),
                n_h=n_h)
            reward = routing.compute_reward(inputs, c.weights())
            reward_sum += reward
            p_coll_sum += chosen.p_coll
            p_cov_sum += p_cov
            self._event("decision", uid, rx, reward)
            if c.policy == "iqmr":
                beta = (routing.dynamic_learning_rate(
                            p_cov, c.beta_min, c.beta_max, c.learning_rate_variant)
                        if c.dynamic_beta else c.beta_fixed)
                gamma = (routing.dynamic_discount(
                            len(u.table), c.m, c.gamma_min, c.gamma_max)
                         if c.dynamic_gamma else c.gamma_fixed)
                lam = c.trace_decay
            elif c.policy == "vanilla_q":
                beta, gamma, lam = c.beta_fixed, c.gamma_fixed, 0.0
            else:
                continue
            u.last_beta, u.last_gamma = beta, gamma
            max_q_next = rec.q_value if rec is not None else 0.0
            routing.update_q(self.q, self.traces, uid, rx, reward, max_q_next,
                             beta, gamma, lam, was_greedy)
        self.prev_transmitters = radiated
        return reward_sum, decisions, n_h_zero, l3_delivered, p_coll_sum, p_cov_sum

    def _phase_receive(self):
        for uid in sorted(self.nodes):
            u = self.nodes[uid]
            if u.relaying and u.mode == routing.RECEIVE and u.q_r:
                u.q_t.extend(u.q_r)
                u.q_r.clear()

    # -- public stepping ---------------------------------------------------

    def run_episode(self) -> EpisodeMetrics:
        self._phase_scenario()
        self._phase_relocations()
        self._phase_traffic()
        self._phase_mobility()
        self._phase_energy_and_charge()
        self._phase_expiry()
        self._phase_modes()
        self._phase_hello()
        reward, decisions, n_h_zero, l3, p_coll_sum, p_cov_sum = self._phase_transmit()
        self._phase_receive()

        self._cum_reward += reward
        self._cum_l3 += l3
        nodes = self.nodes.values()
        m = EpisodeMetrics(
            episode=self.slot,
            reward=reward,
            cumulative_reward=self._cum_reward,
            total_residual_j=sum(u.energy.e_res for u in nodes),
            l3_delivered=l3,
            l3_delivered_cum=self._cum_l3,
            ack_l2_total=sum(u.counters.ack_l2 for u in nodes),
            ack_l3_total=sum(u.counters.ack_l3 for u in nodes),
            pac_tx_l2_total=sum(u.counters.pac_tx_l2 for u in nodes),
            pac_tx_l3_total=sum(u.counters.pac_tx_l3 for u in nodes),
            active_nodes=sum(1 for u in nodes if u.relaying),
            fragmented=int(any(not u.active for u in nodes)),
            decisions=decisions,
            n_h_zero=n_h_zero,
            dropped_cum=self._cum_dropped,
            queued_total=sum(len(u.q_r) + len(u.q_t) for u in nodes),
            p_coll_sum=p_coll_sum,
            p_cov_sum=p_cov_sum,
        )
        self.metrics.append(m)
        self.slot += 1
        return m


@dataclass
class RunResult:
    metrics: list[EpisodeMetrics]
    world: World

    @property
    def events(self):
        return self.world.events


def run_simulation(cfg: SimConfig, trace: bool = False,
                   on_slot_end=None) -> RunResult:
    """Run cfg.episodes slots from a fresh world; deterministic in cfg.seed."""
    world = World(cfg, trace=trace)
    for _ in range(cfg.episodes):
        world.run_episode()
        if on_slot_end is not None:
            on_slot_end(world)
    return RunResult(metrics=world.metrics, world=world)
