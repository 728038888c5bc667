"""Battery model, charging stations and the energy CBF.

The energy CBF is ``h_e = e - e_min - k_alpha * |x - p_c|``: the linear term
bounds the energy needed to drive back to the robot's charging station.
Energy dynamics are ``edot = k_c`` while inside the station radius and
``edot = -(k_s + k_m |u|^2)`` otherwise.  Only the input-free part of edot
(``k_c`` or ``-k_s``) enters the constraint drift term.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .control import ClassKappa, LinearRow

__all__ = [
    "EnergyParams",
    "BatteryState",
    "ChargingStation",
    "EnergyCbf",
    "energy_cbf",
    "energy_drift",
    "energy_constraint_row",
    "battery_step",
]


@dataclasses.dataclass(frozen=True)
class EnergyParams:
    e_min: float = 1.0
    e_max: float = 5.0
    k_alpha: float = 5.0
    k_s: float = 0.05
    k_m: float = 0.01
    k_c: float = 2.0

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError("e_min must be below e_max")
        for name in ("k_alpha", "k_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("k_s", "k_m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclasses.dataclass(frozen=True)
class BatteryState:
    e: float
    e_min: float
    e_max: float
    charging: bool = False


@dataclasses.dataclass(frozen=True)
class ChargingStation:
    position: np.ndarray
    radius: float
    robot: int

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        if not self.radius > 0:
            raise ValueError("station radius must be positive")

    def contains(self, x) -> bool:
        d = np.asarray(x, dtype=float) - self.position
        return bool(d @ d <= self.radius * self.radius)


@dataclasses.dataclass(frozen=True)
class EnergyCbf:
    """``h_e`` with its gradients w.r.t. the owner's position and stored energy."""

    value: float
    grad_x: np.ndarray
    grad_e: float
    owner: int


def energy_cbf(i: int, x, battery: BatteryState, station: ChargingStation, k_alpha: float) -> EnergyCbf:
    rel = np.asarray(x, dtype=float) - station.position
    dist = float(np.hypot(rel[0], rel[1]))
    h = battery.e - battery.e_min - k_alpha * dist
    if dist <= station.radius / 100.0:
        grad = np.zeros(2)
    else:
        grad = -k_alpha * rel / dist
    return EnergyCbf(float(h), grad, 1.0, i)


def energy_drift(battery: BatteryState, params: EnergyParams) -> float:
    """Input-free energy rate: charging gain or static drain."""
    return params.k_c if battery.charging else -params.k_s


def energy_constraint_row(i: int, ev: EnergyCbf, drift: float, alpha_e: ClassKappa) -> LinearRow:
    """``-L_f h_e - L_g h_e u_i - alpha_e(h_e) <= 0`` for a single integrator.

    ``L_f h_e = grad_e * drift`` and ``L_g h_e = grad_x``; the row has no slack.
    """
    lf = ev.grad_e * drift
    return LinearRow({i: -ev.grad_x}, {}, float(lf + alpha_e(ev.value)), f"energy {i}")


def battery_step(battery: BatteryState, u, at_station: bool, dt: float, params: EnergyParams) -> BatteryState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if at_station:
        e = min(battery.e + params.k_c * dt, battery.e_max)
    else:
        u = np.asarray(u, dtype=float)
        e = max(battery.e - (params.k_s + params.k_m * float(u @ u)) * dt, 0.0)
    return BatteryState(e, battery.e_min, battery.e_max, bool(at_station))
