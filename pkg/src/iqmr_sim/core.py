"""Shared value types, normalization helpers, and the simulation config schema.

Positions are (x, y, h) tuples in meters with h the altitude above ground.
All knobs of the simulator live in one flat SimConfig; config files are plain
``key = value`` text with typed scalars and hard errors on unknown keys.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

Position = tuple[float, float, float]
UavId = int

# (lower, upper) pair used by normalize(); bounds are fixed per quantity, not
# per-episode, so normalized values are comparable across a whole run.
NormalizationBounds = tuple[float, float]


class ConfigError(ValueError):
    """Raised for malformed config files, unknown keys, or invalid values."""


def normalize(value: float, bounds: NormalizationBounds) -> float:
    """Min-max normalize value into [0, 1], clamping out-of-range inputs first."""
    lo, hi = bounds
    if not (hi > lo):
        raise ValueError(f"degenerate normalization bounds ({lo}, {hi})")
    v = min(max(value, lo), hi)
    return (v - lo) / (hi - lo)


def distance(a: Position, b: Position) -> float:
    """Euclidean distance between two 3D positions."""
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def horizontal_distance(a: Position, b: Position) -> float:
    """Ground-projected (x, y) distance, the r used by the path-loss law."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class SimConfig:
    """Flat bag of every simulator knob. See README for the full schema table."""

    # topology
    m: int = 0                      # relay node count (required, >= 1)
    radius_m: float = 1000.0        # arena cylinder radius R
    height_max_m: float = 300.0     # arena cylinder height H
    h_min_m: float = 100.0          # operating altitude band
    h_max_m: float = 300.0
    tx_radius_m: float = 250.0      # transmission radius R_t

    # mobility
    v_min_mps: float = 10.0
    v_max_mps: float = 20.0
    d_min_rad: float = -math.pi / 2
    d_max_rad: float = math.pi / 2
    pitch_min_rad: float = -0.15
    pitch_max_rad: float = 0.15
    pause_min_s: float = 1.0
    pause_max_s: float = 20.0
    gmm_alpha: float = 0.75         # memory level of the Gauss-Markov process
    slot_duration_s: float = 0.01   # simulated seconds per slot

    # channel
    path_loss_exponent: float = 2.0
    rician_k: float = 1.0
    nakagami_mapping: str = "printed"    # printed | standard
    theta_th_linear: float = 1.0         # SIR threshold, linear scale
    mc_samples: int = 2000               # Monte Carlo samples per coverage estimate
    interference: str = "active"         # active | all

    # collision / thresholds
    delta_th_j: float = 1000.0           # residual-energy floor for relaying
    phi_th: float = 0.3                  # collision probability ceiling
    xi_x_m: float = 3.0
    xi_y_m: float = 3.0
    collision_variant: str = "complement"  # complement | literal
    r_min_m: float = 0.0                 # recorded for documentation; never used

    # energy
    e_full_j: float = 207792.0
    eps_elec_j_per_bit: float = 50e-9
    eps_amp_fs_j_per_bit_m2: float = 41e-6
    eps_amp_mp_j_per_bit_m4: float = 100e-12
    r0_m: float = 100.0                  # free-space/multipath crossover distance
    eps_payload_kw_per_kg: float = 0.217
    payload_kg: float = 5.0
    eps_hover_w: float = 0.185
    eps_density_kj_per_kg: float = 650.0
    t_charge_s: float = 60.0

    # learning
    w1: float = 0.40
    w2: float = 0.25
    w3: float = 0.15
    w4: float = 0.12
    w5: float = 0.08
    beta_min: float = 0.01
    beta_max: float = 1.0
    gamma_min: float = 0.1
    gamma_max: float = 0.9
    trace_decay: float = 0.8             # lambda of the eligibility traces
    learning_rate_variant: str = "inverted"  # inverted | literal
    dynamic_beta: bool = True
    beta_fixed: float = 0.5              # used when dynamic_beta is off
    dynamic_gamma: bool = True
    gamma_fixed: float = 0.5
    epsilon: float = 0.0                 # exploration probability
    policy: str = "iqmr"                 # iqmr | greedy | vanilla_q

    # protocol
    hello_expiry_ms: float = 300.0
    hello_min_ms: float = 100.0          # floor under the adaptive hello interval
    hello_bytes: int = 64
    ack_bytes: int = 64
    hello_ideal: bool = False            # True: hellos never lost to interference
    l3_acks: bool = True                 # False: no end-to-end acknowledgements

    # traffic
    cbr_rate_bps: float = 2e6
    packet_size_bytes: int = 150
    hop_cap: int = 0                     # 0 means 2*m

    # run
    episodes: int = 1000
    seed: int = 0

    # scenario injection
    scenario_kind: str = "none"          # none | energy_depletion | fragmentation | sweep
    scenario_selection: str = "random"   # random | top_q | bottom_q
    scenario_fraction: float = 0.2
    scenario_start_slot: int = 0
    scenario_duration_ms: float = 400.0
    scenario_rejoin: str = "all_at_once"  # all_at_once | staggered
    scenario_rejoin_window_ms: float = 10.0
    scenario_depletion_j: float = 100.0
    sweep_key: str = ""
    sweep_values: str = ""               # comma-separated values for sweep_key

    def weights(self) -> tuple[float, float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4, self.w5)

    @property
    def hop_cap_effective(self) -> int:
        return self.hop_cap if self.hop_cap > 0 else 2 * self.m

    def slots(self, seconds: float) -> int:
        """Convert a simulated-seconds duration to whole slots, at least 1."""
        return max(1, round(seconds / self.slot_duration_s))

    def validate(self) -> "SimConfig":
        err = _validation_error(self)
        if err:
            raise ConfigError(err)
        return self

    def copy_with(self, **overrides) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(self)}
        for k in overrides:
            if k not in known:
                raise ConfigError(f"unknown config key: {k!r}")
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_ENUMS = {
    "nakagami_mapping": ("printed", "standard"),
    "interference": ("active", "all"),
    "collision_variant": ("complement", "literal"),
    "learning_rate_variant": ("inverted", "literal"),
    "policy": ("iqmr", "greedy", "vanilla_q"),
    "scenario_kind": ("none", "energy_depletion", "fragmentation", "sweep"),
    "scenario_selection": ("random", "top_q", "bottom_q"),
    "scenario_rejoin": ("all_at_once", "staggered"),
}


def _validation_error(c: SimConfig) -> str | None:
    if c.m < 1:
        return "config key 'm' is required and must be a positive node count"
    for name, allowed in _ENUMS.items():
        if getattr(c, name) not in allowed:
            return f"{name} must be one of {allowed}, got {getattr(c, name)!r}"
    if c.radius_m <= 0 or c.height_max_m <= 0 or c.tx_radius_m <= 0:
        return "radius_m, height_max_m and tx_radius_m must be positive"
    if not (0 <= c.h_min_m < c.h_max_m <= c.height_max_m):
        return "altitude band must satisfy 0 <= h_min_m < h_max_m <= height_max_m"
    if not (0 < c.v_min_mps <= c.v_max_mps):
        return "velocity band must satisfy 0 < v_min_mps <= v_max_mps"
    if c.d_min_rad > c.d_max_rad:
        return "direction band is empty (d_min_rad > d_max_rad)"
    if c.pitch_min_rad > c.pitch_max_rad:
        return "pitch band is empty (pitch_min_rad > pitch_max_rad)"
    if not (0 <= c.pause_min_s <= c.pause_max_s):
        return "pause band must satisfy 0 <= pause_min_s <= pause_max_s"
    if not (0 < c.gmm_alpha < 1):
        return "gmm_alpha must lie strictly inside (0, 1)"
    if c.slot_duration_s <= 0:
        return "slot_duration_s must be positive"
    if c.path_loss_exponent <= 0:
        return "path_loss_exponent must be positive"
    if c.rician_k < 0:
        return "rician_k must be >= 0"
    if c.theta_th_linear <= 0:
        return "theta_th_linear must be positive"
    if c.mc_samples < 1:
        return "mc_samples must be >= 1"
    if c.delta_th_j < 0:
        return "delta_th_j must be >= 0"
    if not (0 < c.phi_th <= 1):
        return "phi_th must lie in (0, 1]"
    if c.xi_x_m <= 0 or c.xi_y_m <= 0:
        return "xi_x_m and xi_y_m must be positive"
    if c.e_full_j <= 0:
        return "e_full_j must be positive"
    if min(c.eps_elec_j_per_bit, c.eps_amp_fs_j_per_bit_m2,
           c.eps_amp_mp_j_per_bit_m4) < 0:
        return "per-bit energy constants must be >= 0"
    if c.r0_m <= 0:
        return "r0_m must be positive"
    if c.payload_kg <= 0 or c.eps_density_kj_per_kg <= 0:
        return "payload_kg and eps_density_kj_per_kg must be positive"
    if c.eps_payload_kw_per_kg < 0 or c.eps_hover_w < 0:
        return "eps_payload_kw_per_kg and eps_hover_w must be >= 0"
    if c.t_charge_s < 0:
        return "t_charge_s must be >= 0"
    w = c.weights()
    if any(x <= 0 for x in w):
        return "reward weights w1..w5 must all be positive"
    if not all(w[i] > w[i + 1] for i in range(4)):
        return "reward weights must be strictly decreasing: w1 > w2 > w3 > w4 > w5"
    if abs(sum(w) - 1.0) > 1e-9:
        return f"reward weights must sum to 1, got {sum(w)!r}"
    if not (0 < c.beta_min < c.beta_max <= 1):
        return "learning-rate bounds must satisfy 0 < beta_min < beta_max <= 1"
    if not (0 <= c.gamma_min < c.gamma_max < 1):
        return "discount bounds must satisfy 0 <= gamma_min < gamma_max < 1"
    if not (0 <= c.trace_decay <= 1):
        return "trace_decay must lie in [0, 1]"
    if not (0 < c.beta_fixed <= 1):
        return "beta_fixed must lie in (0, 1]"
    if not (0 <= c.gamma_fixed < 1):
        return "gamma_fixed must lie in [0, 1)"
    if not (0 <= c.epsilon <= 1):
        return "epsilon must lie in [0, 1]"
    if c.hello_expiry_ms <= 0:
        return "hello_expiry_ms must be positive"
    if not (0 <= c.hello_min_ms < c.hello_expiry_ms):
        return "hello_min_ms must lie in [0, hello_expiry_ms)"
    if c.hello_bytes < 1 or c.ack_bytes < 1:
        return "hello_bytes and ack_bytes must be >= 1"
    if c.cbr_rate_bps < 0:
        return "cbr_rate_bps must be >= 0"
    if c.packet_size_bytes < 1:
        return "packet_size_bytes must be >= 1"
    if c.hop_cap < 0:
        return "hop_cap must be >= 0 (0 selects the 2*m default)"
    if c.episodes < 0:
        return "episodes must be >= 0"
    if not (0 <= c.scenario_fraction <= 1):
        return "scenario_fraction must lie in [0, 1]"
    if c.scenario_start_slot < 0:
        return "scenario_start_slot must be >= 0"
    if c.scenario_duration_ms < 0 or c.scenario_rejoin_window_ms < 0:
        return "scenario durations must be >= 0"
    if c.scenario_depletion_j < 0:
        return "scenario_depletion_j must be >= 0"
    if c.scenario_kind == "sweep":
        known = {f.name for f in dataclasses.fields(SimConfig)}
        if c.sweep_key not in known:
            return f"sweep_key must name a config key, got {c.sweep_key!r}"
        if c.sweep_key in ("sweep_key", "sweep_values", "scenario_kind"):
            return f"sweep_key may not be {c.sweep_key!r}"
        if not c.sweep_values.strip():
            return "sweep_values must list at least one value"
    return None


def _parse_scalar(key: str, raw: str, target_type: type):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        raw = raw[1:-1]
    try:
        if target_type is bool:
            low = raw.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError(raw)
        if target_type is int:
            return int(raw, 0)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"config key {key!r} expects {target_type.__name__}, got {raw!r}"
        ) from None


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
_TYPE_OBJECTS = {"int": int, "float": float, "bool": bool, "str": str}


def field_type(key: str) -> type:
    t = _FIELD_TYPES.get(key)
    if t is None:
        raise ConfigError(f"unknown config key: {key!r}")
    return _TYPE_OBJECTS[t] if isinstance(t, str) else t


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines into a typed dict. Unknown keys error."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        out[key] = _parse_scalar(key, raw, field_type(key))
    return out


def parse_override(item: str) -> tuple[str, object]:
    """Parse one ``key=value`` override as passed on the command line."""
    if "=" not in item:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    key, _, raw = item.partition("=")
    key = key.strip()
    return key, _parse_scalar(key, raw, field_type(key))


def load_config(path: str, overrides: dict | None = None) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        values = parse_config_text(fh.read(), source=path)
    if overrides:
        values.update(overrides)
    return SimConfig(**values).validate()
