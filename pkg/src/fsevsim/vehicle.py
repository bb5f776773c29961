"""Straight-line point-mass vehicle closing the loop between torque and speed."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from . import kernels as K


@dataclass(frozen=True)
class VehicleParams:
    # placeholder Formula Student values, to be replaced by calibration data
    mass_kg: float = 300.0
    wheel_radius_m: float = 0.2
    gear_ratio: float = 12.5
    cda_m2: float = 1.2
    air_density: float = 1.2
    brake_gain_n_per_bar: float = 100.0

    def check(self) -> None:
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"vehicle.{name} must be positive")

    def motor_rpm(self, v: float) -> float:
        return v / self.wheel_radius_m * self.gear_ratio * 30.0 / math.pi


def vehicle_step(v: float, wheel_torques: Sequence[float], params: VehicleParams,
                 brake_bar: float, dt: float) -> Tuple[float, float]:
    """Advance speed one step; returns (v', motor speed in rpm)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if v < 0:
        raise ValueError("speed must be non-negative")
    return K.vehicle_step(v, float(sum(wheel_torques)), brake_bar, dt, params.mass_kg,
                          params.wheel_radius_m, params.gear_ratio, params.cda_m2,
                          params.air_density, params.brake_gain_n_per_bar)
