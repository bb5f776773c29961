"""Per-wheel motor and inverter model: torque-speed-voltage envelope, the
peak-torque window, thermal derating and DC/mechanical power conversion."""

from __future__ import annotations

from array import array
from dataclasses import dataclass, replace
from typing import Tuple

from . import kernels as K

RPM_TO_RAD = K.RPM_TO_RAD
WHEELS = ("FL", "FR", "RL", "RR")

ACCEPT = "accept"
DERATE = "derate"
DISABLE = "disable"


@dataclass(frozen=True)
class MotorSpec:
    rated_power_w: float = 12300.0
    max_power_w: float = 35000.0
    rated_torque_nm: float = 9.8
    max_torque_nm: float = 21.0
    rated_speed_rpm: float = 12000.0
    max_speed_rpm: float = 20000.0
    rated_current_a: float = 41.0
    max_current_a: float = 105.0
    reference_voltage_v: float = 600.0

    @property
    def base_speed_rpm(self) -> float:
        return self.max_power_w / self.max_torque_nm / RPM_TO_RAD

    def check(self) -> None:
        pairs = (("power", self.rated_power_w, self.max_power_w),
                 ("torque", self.rated_torque_nm, self.max_torque_nm),
                 ("speed", self.rated_speed_rpm, self.max_speed_rpm),
                 ("current", self.rated_current_a, self.max_current_a))
        for name, rated, peak in pairs:
            if rated <= 0 or peak < rated:
                raise ValueError(f"motor {name}: need 0 < rated <= max")
        if self.base_speed_rpm > self.max_speed_rpm:
            raise ValueError("base speed above max speed")


@dataclass(frozen=True)
class InverterConfig:
    efficiency: float = 0.9
    peak_window_s: float = 1.24
    motor_temp_limit_c: float = 100.0
    igbt_temp_limit_c: float = 110.0
    derate_band_c: float = 15.0
    thermal_tau_s: float = 60.0
    ambient_c: float = 25.0
    # steady-state rise at rated torque; scales with (torque / rated)^2
    motor_rise_rated_c: float = 50.0
    igbt_rise_rated_c: float = 40.0
    # speed limiter fades torque to zero over this band below max speed
    speed_limiter_band_rpm: float = 250.0

    def check(self) -> None:
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")
        if self.peak_window_s <= 0 or self.thermal_tau_s <= 0 or self.derate_band_c <= 0:
            raise ValueError("peak window, thermal tau and derate band must be positive")
        if self.speed_limiter_band_rpm < 0:
            raise ValueError("speed limiter band must be non-negative")


@dataclass(frozen=True)
class InverterState:
    peak_timer_s: float = 0.0
    exhausted: bool = False
    motor_temp_c: float = 25.0
    igbt_temp_c: float = 25.0
    enabled: bool = True
    dc_link_v: float = 600.0


def inverter_params(spec: MotorSpec, cfg: InverterConfig) -> array:
    p = array("d", [0.0] * K.IP_SIZE)
    p[K.IP_T_MAX] = spec.max_torque_nm
    p[K.IP_T_RATED] = spec.rated_torque_nm
    p[K.IP_P_MAX] = spec.max_power_w
    p[K.IP_V_REF] = spec.reference_voltage_v
    p[K.IP_N_MAX] = spec.max_speed_rpm
    p[K.IP_ETA] = cfg.efficiency
    p[K.IP_WINDOW] = cfg.peak_window_s
    p[K.IP_MOTOR_LIMIT] = cfg.motor_temp_limit_c
    p[K.IP_IGBT_LIMIT] = cfg.igbt_temp_limit_c
    p[K.IP_BAND] = cfg.derate_band_c
    p[K.IP_TAU] = cfg.thermal_tau_s
    p[K.IP_T_AMB] = cfg.ambient_c
    p[K.IP_MOTOR_RISE] = cfg.motor_rise_rated_c
    p[K.IP_IGBT_RISE] = cfg.igbt_rise_rated_c
    p[K.IP_LIMITER_BAND] = cfg.speed_limiter_band_rpm
    return p


def envelope(speed_rpm: float, vdc: float, spec: MotorSpec = MotorSpec()) -> float:
    """Constant-torque / constant-power envelope, ignoring inverter state."""
    if speed_rpm < 0:
        raise ValueError("negative speed")
    return K.envelope_torque(speed_rpm, vdc, spec.max_torque_nm, spec.max_power_w,
                             spec.reference_voltage_v, spec.max_speed_rpm)


def inverter_safety_check(inv: InverterState,
                          cfg: InverterConfig = InverterConfig()) -> Tuple[str, float]:
    """Return (verdict, torque factor) from motor and IGBT temperatures."""
    if inv.motor_temp_c > cfg.motor_temp_limit_c or inv.igbt_temp_c > cfg.igbt_temp_limit_c:
        return DISABLE, 0.0
    f = K.thermal_factor(inv.motor_temp_c, inv.igbt_temp_c, cfg.motor_temp_limit_c,
                         cfg.igbt_temp_limit_c, cfg.derate_band_c)
    if f < 1.0:
        return DERATE, f
    return ACCEPT, 1.0


def max_torque(speed_rpm: float, vdc: float, inv: InverterState = InverterState(),
               spec: MotorSpec = MotorSpec(), cfg: InverterConfig = InverterConfig()) -> float:
    env = envelope(speed_rpm, vdc, spec)
    if inv.exhausted:
        env = min(env, spec.rated_torque_nm)
    verdict, f = inverter_safety_check(inv, cfg)
    if verdict != ACCEPT:
        env = min(env, spec.rated_torque_nm) * f
    if not inv.enabled:
        return 0.0
    return env


def step_peak_window(inv: InverterState, torque: float, dt: float,
                     spec: MotorSpec = MotorSpec(),
                     cfg: InverterConfig = InverterConfig()) -> InverterState:
    """Accumulate time above rated torque; decay at the same rate otherwise.

    Once the window is used up the unit stays clamped to rated torque until
    the timer has decayed back to zero.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    timer, ex = K.peak_window_step(inv.peak_timer_s, 1.0 if inv.exhausted else 0.0,
                                   abs(torque), spec.rated_torque_nm, cfg.peak_window_s, dt)
    return replace(inv, peak_timer_s=timer, exhausted=ex > 0.5)


def step_thermal(inv: InverterState, torque: float, dt: float, spec: MotorSpec = MotorSpec(),
                 cfg: InverterConfig = InverterConfig()) -> InverterState:
    load = (torque / spec.rated_torque_nm) ** 2
    tm = inv.motor_temp_c + (cfg.ambient_c + cfg.motor_rise_rated_c * load
                             - inv.motor_temp_c) * dt / cfg.thermal_tau_s
    ti = inv.igbt_temp_c + (cfg.ambient_c + cfg.igbt_rise_rated_c * load
                            - inv.igbt_temp_c) * dt / cfg.thermal_tau_s
    return replace(inv, motor_temp_c=tm, igbt_temp_c=ti)


def apply_torque(cmd: float, speed_rpm: float, vdc: float,
                 efficiency: float = 0.9) -> Tuple[float, float]:
    """Return (mechanical power W, DC current A) for a torque at a speed."""
    if vdc <= 0:
        raise ValueError("DC-link voltage must be positive")
    p_mech = cmd * speed_rpm * RPM_TO_RAD
    p_dc = p_mech / efficiency
    return p_mech, p_dc / vdc


def dc_power(cmd: float, speed_rpm: float, efficiency: float = 0.9) -> float:
    return cmd * speed_rpm * RPM_TO_RAD / efficiency


class DriveUnits:
    """The four inverter/motor units as one flat state block for the scheduler."""

    def __init__(self, spec: MotorSpec = MotorSpec(), cfg: InverterConfig = InverterConfig()):
        self.spec = spec
        self.cfg = cfg
        self.params = inverter_params(spec, cfg)
        self.state = array("d", [0.0] * (4 * K.INV_STRIDE))
        for i in range(4):
            self.state[i * K.INV_STRIDE + K.INV_MOTOR_T] = cfg.ambient_c
            self.state[i * K.INV_STRIDE + K.INV_IGBT_T] = cfg.ambient_c
        self.setpoint = array("d", [0.0] * 4)
        self.power_limit = array("d", [0.0] * 4)
        self.total_dc_w = 0.0

    def step(self, speed_rpm: float, vdc: float, hv_on: bool, dt: float) -> float:
        self.total_dc_w = K.inverter_tick(self.state, self.setpoint, self.power_limit,
                                          speed_rpm, vdc, hv_on, dt, self.params)
        return self.total_dc_w

    def _get(self, i: int, field: int) -> float:
        return self.state[i * K.INV_STRIDE + field]

    def torque(self, i: int) -> float:
        return self._get(i, K.INV_TORQUE)

    def torques(self) -> Tuple[float, ...]:
        return tuple(self._get(i, K.INV_TORQUE) for i in range(4))

    def p_mech(self) -> float:
        return sum(self._get(i, K.INV_P_MECH) for i in range(4))

    def envelope(self, i: int) -> float:
        return self._get(i, K.INV_ENVELOPE)

    def unit_state(self, i: int, vdc: float = 600.0, enabled: bool = True) -> InverterState:
        return InverterState(
            peak_timer_s=self._get(i, K.INV_TIMER),
            exhausted=self._get(i, K.INV_EXHAUSTED) > 0.5,
            motor_temp_c=self._get(i, K.INV_MOTOR_T),
            igbt_temp_c=self._get(i, K.INV_IGBT_T),
            enabled=enabled, dc_link_v=vdc)


def omega(speed_rpm: float) -> float:
    return speed_rpm * RPM_TO_RAD

