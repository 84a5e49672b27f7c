"""Discrete-time simulator of a multi-UAV relay network.

Relay selection runs on Q-learning with eligibility traces, a coverage-driven
learning rate, and a neighborhood-driven discount, next to greedy-geographic
and one-step Q baselines. See README.md for the config schema and the CLI.
"""

from .channel import (
    ChannelParams,
    coverage_probability,
    geometric_sir,
    nakagami_m,
    path_loss,
    sample_fading,
    sir,
)
from .core import (
    ConfigError,
    NormalizationBounds,
    Position,
    SimConfig,
    UavId,
    distance,
    horizontal_distance,
    load_config,
    normalize,
    parse_config_text,
    parse_override,
)
from .energy import (
    EnergyState,
    fly_energy,
    fly_energy_joules,
    start_charge,
    tick_charge,
    tx_energy,
    update_residual,
)
from .engine import (
    GCS,
    EpisodeMetrics,
    Packet,
    RunResult,
    ScenarioSpec,
    TrafficSource,
    Uav,
    World,
    run_simulation,
)
from .link_metrics import (
    APPROACHING,
    EQUIDISTANT,
    RECEDING,
    PacketCounters,
    classify_relation,
    collision_probability,
    link_sustenance_time,
    packet_reception_status,
)
from .mobility import (
    MobilityState,
    advance_position,
    apply_boundary,
    initial_state,
    sample_pause,
    steer_inward,
    step_gauss_markov,
    wrap_angle,
)
from .neighbors import (
    HelloMessage,
    NeighborRecord,
    NeighborTable,
    in_candidate_sector,
    schedule_next_hello,
)
from .routing import (
    CHARGE,
    MODES,
    NEIGHBOR_DISCOVERY,
    RECEIVE,
    TRANSMIT,
    Candidate,
    ModeEvents,
    RewardInputs,
    baseline_greedy,
    compute_reward,
    dynamic_discount,
    dynamic_learning_rate,
    filter_feasible,
    max_outgoing_q,
    select_next_hop,
    step_mode,
    update_q,
)

__version__ = "0.1.0"
