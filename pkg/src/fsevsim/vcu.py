"""VCU torque arbitration: input plausibility, per-wheel split, the 80 kW
power cap, accumulator thermal derating and the envelope clamp."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from . import kernels as K
from .drivetrain import MotorSpec, RPM_TO_RAD

EQUAL = "equal"
PROPORTIONAL = "proportional"
VECTORING_MODES = (EQUAL, PROPORTIONAL)


@dataclass(frozen=True)
class ControlConfig:
    power_cap_w: float = 80000.0
    efficiency: float = 0.9
    vectoring_mode: str = EQUAL
    vectoring_gain: float = 0.5
    steer_max_deg: float = 90.0
    derate_start_c: float = 50.0
    derate_end_c: float = 60.0
    # pedal plausibility (brake + throttle) latch
    brake_hard_bar: float = 10.0
    apps_cut_threshold: float = 0.25
    apps_release_threshold: float = 0.05
    # physical sensor ranges; outside them the reading is a sensor fault
    apps_min: float = -0.05
    apps_max: float = 1.05
    brake_max_bar: float = 200.0
    steer_limit_deg: float = 180.0

    def check(self) -> None:
        if self.vectoring_mode not in VECTORING_MODES:
            raise ValueError(f"unknown vectoring mode {self.vectoring_mode!r}")
        if not 0.0 <= self.vectoring_gain <= 1.0:
            raise ValueError("vectoring gain must be in [0, 1]")
        if self.power_cap_w <= 0 or self.steer_max_deg <= 0:
            raise ValueError("power cap and steering lock must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")
        if self.derate_end_c <= self.derate_start_c:
            raise ValueError("derate band end must exceed start")
        if self.apps_release_threshold >= self.apps_cut_threshold:
            raise ValueError("pedal release threshold must be below cut threshold")


@dataclass(frozen=True)
class DriverInputs:
    pedal: float
    brake_bar: float
    steering_deg: float
    torque_cut: bool = False
    sensor_fault: bool = False

    @property
    def effective_pedal(self) -> float:
        return 0.0 if (self.torque_cut or self.sensor_fault) else self.pedal


def validate_inputs(apps: float, brake_bar: float, steering_deg: float, latched: bool = False,
                    cfg: ControlConfig = ControlConfig()) -> DriverInputs:
    """Clamp the pedal and run the brake/throttle plausibility latch.

    ``latched`` is the cut flag from the previous call; the returned
    ``torque_cut`` is the new value to feed back.
    """
    fault = not (math.isfinite(apps) and math.isfinite(brake_bar) and math.isfinite(steering_deg))
    fault = fault or not (cfg.apps_min <= apps <= cfg.apps_max)
    fault = fault or not (0.0 <= brake_bar <= cfg.brake_max_bar)
    fault = fault or abs(steering_deg) > cfg.steer_limit_deg
    pedal = min(1.0, max(0.0, apps)) if math.isfinite(apps) else 0.0
    brake = max(0.0, brake_bar) if math.isfinite(brake_bar) else 0.0
    steer = steering_deg if math.isfinite(steering_deg) else 0.0
    cut = latched
    if cut and pedal < cfg.apps_release_threshold:
        cut = False
    if brake > cfg.brake_hard_bar and pedal > cfg.apps_cut_threshold:
        cut = True
    return DriverInputs(pedal, brake, steer, cut, fault)


def thermal_derate(hottest_cell_c: float, cfg: ControlConfig = ControlConfig()) -> float:
    if hottest_cell_c <= cfg.derate_start_c:
        return 1.0
    if hottest_cell_c >= cfg.derate_end_c:
        return 0.0
    return (cfg.derate_end_c - hottest_cell_c) / (cfg.derate_end_c - cfg.derate_start_c)


def torque_vectoring(steering_deg: float, axle_torque: float, mode: str = EQUAL,
                     gain: float = 0.5, steer_max_deg: float = 90.0) -> Tuple[float, float]:
    """Split an axle torque into (left, right). Positive steering turns left."""
    if mode == EQUAL:
        return axle_torque * 0.5, axle_torque * 0.5
    if mode != PROPORTIONAL:
        raise ValueError(f"unknown vectoring mode {mode!r}")
    lock = min(abs(steering_deg), steer_max_deg) / steer_max_deg
    outer = min(1.0, max(0.0, (1.0 + gain * lock) / 2.0))
    inner = 1.0 - outer
    if steering_deg > 0:
        return axle_torque * inner, axle_torque * outer
    if steering_deg < 0:
        return axle_torque * outer, axle_torque * inner
    return axle_torque * 0.5, axle_torque * 0.5


@dataclass(frozen=True)
class TorqueCommand:
    """Per-wheel torques (FL, FR, RL, RR) with the limits that shaped them."""
    torques: Tuple[float, float, float, float]
    driver_request: float
    shares: Tuple[float, float, float, float]
    power_factor: float
    thermal_factor: float
    envelope: Tuple[float, float, float, float]
    power_limits: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @property
    def total(self) -> float:
        return sum(self.torques)


def _chain(request: float, share: float, s: float, f: float, env: float) -> float:
    t = request * 2.0 * share * s * f
    return t if t < env else env


def recompute(cmd: TorqueCommand) -> Tuple[float, ...]:
    """Rebuild the final torques from the recorded limit chain."""
    return tuple(_chain(cmd.driver_request, cmd.shares[i], cmd.power_factor,
                        cmd.thermal_factor, cmd.envelope[i]) for i in range(4))


ZERO = (0.0, 0.0, 0.0, 0.0)


def arbitrate_torque(inputs: DriverInputs, wheel_speeds_rpm: Sequence[float], vdc: float,
                     hottest_cell_c: float, spec: MotorSpec = MotorSpec(),
                     cfg: ControlConfig = ControlConfig()) -> TorqueCommand:
    request = inputs.effective_pedal * spec.max_torque_nm
    left, right = torque_vectoring(inputs.steering_deg, 1.0, cfg.vectoring_mode,
                                   cfg.vectoring_gain, cfg.steer_max_deg)
    shares = (left, right, left, right)
    speeds = [max(0.0, float(n)) for n in wheel_speeds_rpm]
    omegas = [n * RPM_TO_RAD for n in speeds]
    raw = [request * 2.0 * sh for sh in shares]
    s = K.power_cap_factor(raw, omegas, cfg.efficiency, cfg.power_cap_w)
    f = thermal_derate(hottest_cell_c, cfg)
    env = tuple(K.envelope_torque(n, vdc, spec.max_torque_nm, spec.max_power_w,
                                  spec.reference_voltage_v, spec.max_speed_rpm) for n in speeds)
    torques = tuple(_chain(request, shares[i], s, f, env[i]) for i in range(4))
    total = torques[0] + torques[1] + torques[2] + torques[3]
    if total > 0.0:
        limits = tuple(cfg.power_cap_w * t / total for t in torques)
    else:
        limits = ZERO
    return TorqueCommand(torques, request, shares, s, f, env, limits)
