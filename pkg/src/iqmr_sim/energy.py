"""Energy accounting: radio transmit cost, flight power, residual and charging.

Transmit cost follows the two-branch first-order radio model with a
free-space/multipath crossover at r0. Flight cost is kept in two forms: the
raw rating expression fly_energy (payload power in kW plus hover terms, as
configured) and fly_energy_joules, which applies the single time-consistent
unit conversion the engine charges against the battery.
"""

from __future__ import annotations

from dataclasses import dataclass

# Default constants (joules per bit, per bit*m^2, per bit*m^4, meters, ...).
EPS_ELEC = 50e-9
EPS_AMP_FS = 41e-6
EPS_AMP_MP = 100e-12
R0_CROSSOVER = 100.0
EPS_PAYLOAD_KW_PER_KG = 0.217
EPS_HOVER_W = 0.185
EPS_DENSITY_KJ_PER_KG = 650.0
E_FULL = 207792.0  # 11.1 V * 5200 mAh


def tx_energy(k_bits: float, r_m: float, *,
              eps_elec: float = EPS_ELEC,
              eps_fs: float = EPS_AMP_FS,
              eps_mp: float = EPS_AMP_MP,
              r0_m: float = R0_CROSSOVER) -> float:
    """Joules to transmit k bits over distance r (free-space below r0, multipath above)."""
    if k_bits < 0 or r_m < 0:
        raise ValueError("k_bits and r_m must be >= 0")
    if r_m <= r0_m:
        return eps_elec * k_bits + eps_fs * k_bits * r_m ** 2
    return eps_elec * k_bits + eps_mp * k_bits * r_m ** 4


def fly_energy(w_kg: float, tau_s: float, *,
               eps_payload: float = EPS_PAYLOAD_KW_PER_KG,
               eps_hover: float = EPS_HOVER_W,
               eps_density: float = EPS_DENSITY_KJ_PER_KG) -> float:
    """Raw flight-cost rating (eps_payload*w + eps_hover*tau) / (1 - (eps_payload/eps_density)*tau).

    Constants carry their configured magnitudes unchanged, so at tau = 0 this
    is just the payload term eps_payload * w.
    """
    denom = 1.0 - (eps_payload / eps_density) * tau_s
    if denom <= 0.0:
        raise ValueError(f"flight time {tau_s} s exceeds the energy-density limit")
    return (eps_payload * w_kg + eps_hover * tau_s) / denom


def fly_energy_joules(w_kg: float, tau_s: float, *,
                      eps_payload: float = EPS_PAYLOAD_KW_PER_KG,
                      eps_hover: float = EPS_HOVER_W,
                      eps_density: float = EPS_DENSITY_KJ_PER_KG) -> float:
    """Flight cost in joules for tau seconds aloft.

    This is the one place the rating's mixed units are resolved: the payload
    power is kW (so *1000*tau -> J) and hover power is W (so *tau -> J); the
    denominator (kW/kJ * s) is dimensionless as written.
    """
    denom = 1.0 - (eps_payload / eps_density) * tau_s
    if denom <= 0.0:
        raise ValueError(f"flight time {tau_s} s exceeds the energy-density limit")
    return (eps_payload * w_kg * 1000.0 * tau_s + eps_hover * tau_s) / denom


@dataclass
class EnergyState:
    e_res: float = E_FULL
    e_full: float = E_FULL
    charging: bool = False
    charge_elapsed_s: float = 0.0
    spent_j: float = 0.0   # actual deductions since the last full charge


def update_residual(state: EnergyState, spend_j: float) -> EnergyState:
    """Deduct spend_j from the residual, flooring at zero (partial deduction)."""
    if spend_j < 0:
        raise ValueError("spend_j must be >= 0")
    actual = min(spend_j, state.e_res)
    state.e_res -= actual
    state.spent_j += actual
    return state


def start_charge(state: EnergyState) -> EnergyState:
    state.charging = True
    state.charge_elapsed_s = 0.0
    return state


def tick_charge(state: EnergyState, dt_s: float, t_charge_s: float) -> bool:
    """Advance a charge cycle by dt seconds; True when the battery is full again."""
    if not state.charging:
        return False
    state.charge_elapsed_s += dt_s
    if state.charge_elapsed_s >= t_charge_s:
        state.e_res = state.e_full
        state.charging = False
        state.charge_elapsed_s = 0.0
        state.spent_j = 0.0
        return True
    return False
