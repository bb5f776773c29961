"""Shutdown circuit and HV interlock state machine with precharge/discharge
RC models, BSPD latch, TSAL indication and HVD handling."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from . import kernels as K


class TsState(enum.IntEnum):
    TS_OFF = 0
    PRECHARGE = 1
    TS_ACTIVE = 2
    DISCHARGE = 3
    FAULT = 4


TS_OFF = TsState.TS_OFF
PRECHARGE = TsState.PRECHARGE
TS_ACTIVE = TsState.TS_ACTIVE
DISCHARGE = TsState.DISCHARGE
FAULT = TsState.FAULT

RED = "RED"
GREEN = "GREEN"


@dataclass(frozen=True)
class SafetyConfig:
    precharge_r_ohm: float = 270.0
    dc_link_c_f: float = 0.5e-3
    discharge_r_ohm: float = 2000.0
    precharge_ratio: float = 0.95
    safe_voltage_v: float = 60.0
    discharge_budget_s: float = 5.0
    bspd_brake_bar: float = 30.0
    bspd_power_w: float = 5000.0
    bspd_persist_s: float = 0.5

    @property
    def precharge_tau(self) -> float:
        return self.precharge_r_ohm * self.dc_link_c_f

    @property
    def discharge_tau(self) -> float:
        return self.discharge_r_ohm * self.dc_link_c_f

    def check(self) -> None:
        for name in ("precharge_r_ohm", "dc_link_c_f", "discharge_r_ohm", "safe_voltage_v",
                     "discharge_budget_s", "bspd_persist_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"safety.{name} must be positive")
        if not 0 < self.precharge_ratio < 1:
            raise ValueError("precharge ratio must be in (0, 1)")


@dataclass(frozen=True)
class ShutdownState:
    state: TsState = TS_OFF
    air_minus: bool = False
    air_plus: bool = False
    precharge_relay: bool = False
    v_link: float = 0.0
    bspd_latched: bool = False
    hvd_present: bool = True
    loop_closed: bool = True
    fault_latched: bool = False
    fault_reason: str = ""

    @property
    def hv_connected(self) -> bool:
        return self.air_minus and self.air_plus


@dataclass(frozen=True)
class ShutdownInputs:
    pack_voltage: float = 600.0
    activate: bool = False
    reset: bool = False
    bms_fault: bool = False
    bspd_latched: bool = False


@dataclass(frozen=True)
class BspdInputs:
    brake_bar: float
    hecs_current_a: float
    dc_link_v: float


@dataclass(frozen=True)
class BspdState:
    timer_s: float = 0.0
    latched: bool = False


_BSPD_IDLE = BspdState()


def bspd_evaluate(bspd: BspdState, inputs: BspdInputs, dt: float,
                  cfg: SafetyConfig = SafetyConfig()) -> BspdState:
    """Latch when hard braking and tractive power coincide for the persistence time."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if bspd.latched:
        return bspd
    if inputs.brake_bar <= cfg.bspd_brake_bar and bspd.timer_s == 0.0:
        return _BSPD_IDLE
    power = inputs.dc_link_v * inputs.hecs_current_a
    if inputs.brake_bar > cfg.bspd_brake_bar and power > cfg.bspd_power_w:
        timer = bspd.timer_s + dt
        return BspdState(timer, timer >= cfg.bspd_persist_s - 1e-9)
    return BspdState(0.0, False)


def tsal_state(s: ShutdownState, cfg: SafetyConfig = SafetyConfig()) -> str:
    if s.air_minus or s.air_plus or s.v_link >= cfg.safe_voltage_v:
        return RED
    return GREEN


def _open_all(s: ShutdownState, state: TsState, **kw) -> ShutdownState:
    return replace(s, state=state, air_minus=False, air_plus=False, precharge_relay=False, **kw)


def hvd_remove(s: ShutdownState) -> ShutdownState:
    s = replace(s, hvd_present=False)
    if s.state in (PRECHARGE, TS_ACTIVE):
        return _open_all(s, DISCHARGE)
    return s


def hvd_insert(s: ShutdownState) -> ShutdownState:
    return replace(s, hvd_present=True)


def open_loop(s: ShutdownState) -> ShutdownState:
    return replace(s, loop_closed=False)


def close_loop(s: ShutdownState) -> ShutdownState:
    return replace(s, loop_closed=True)


def step_shutdown(s: ShutdownState, inputs: ShutdownInputs, dt: float,
                  cfg: SafetyConfig = SafetyConfig()) -> ShutdownState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    st = s.state
    if (st == TS_ACTIVE and not (inputs.bms_fault or inputs.bspd_latched or inputs.reset)
            and s.loop_closed and s.hvd_present and not s.fault_latched and not s.bspd_latched):
        # steady running: only the link voltage follows the pack
        if s.v_link == inputs.pack_voltage:
            return s
        return ShutdownState(TS_ACTIVE, s.air_minus, s.air_plus, s.precharge_relay,
                             inputs.pack_voltage, False, True, True, False, s.fault_reason)
    bspd = s.bspd_latched or inputs.bspd_latched

    if inputs.reset and st in (FAULT, TS_OFF) and not inputs.bms_fault:
        # explicit reset clears both latches; a live BMS fault blocks it
        bspd = False
        s = replace(s, fault_latched=False, fault_reason="", bspd_latched=False)
        if st == FAULT:
            st = TS_OFF
            s = replace(s, state=TS_OFF)

    reason = ""
    if inputs.bms_fault:
        reason = "bms"
    elif bspd:
        reason = "bspd"
    latch = s.fault_latched or bool(reason)
    if reason and not s.fault_latched:
        s = replace(s, fault_reason=reason)
    s = replace(s, bspd_latched=bspd, fault_latched=latch)

    unsafe = latch or not s.loop_closed or not s.hvd_present
    if st in (PRECHARGE, TS_ACTIVE) and unsafe:
        s = _open_all(s, DISCHARGE)
        st = DISCHARGE

    v = s.v_link
    if st == PRECHARGE:
        v = K.rc_step(v, inputs.pack_voltage, dt, cfg.precharge_tau)
        if v >= cfg.precharge_ratio * inputs.pack_voltage:
            return replace(s, state=TS_ACTIVE, precharge_relay=False, air_plus=True,
                           air_minus=True, v_link=v)
        return replace(s, v_link=v)
    if st == TS_ACTIVE:
        return replace(s, v_link=inputs.pack_voltage)

    # every other state has the AIRs open and the discharge path across the link
    v = K.rc_step(v, 0.0, dt, cfg.discharge_tau)
    if st == DISCHARGE:
        if v < cfg.safe_voltage_v:
            return replace(s, state=FAULT if latch else TS_OFF, v_link=v)
        return replace(s, v_link=v)
    if st == TS_OFF:
        if latch:
            return replace(s, state=FAULT, v_link=v)
        if inputs.activate and not unsafe:
            # AIR- and the precharge relay close now, so the link charges this tick
            v = K.rc_step(s.v_link, inputs.pack_voltage, dt, cfg.precharge_tau)
            return replace(s, state=PRECHARGE, air_minus=True, precharge_relay=True, v_link=v)
        return replace(s, v_link=v)
    # FAULT
    return replace(s, v_link=v)


def check_invariants(s: ShutdownState, pack_voltage: float,
                     cfg: SafetyConfig = SafetyConfig()) -> list:
    """Return a list of violated safety invariants (empty when safe)."""
    bad = []
    if s.precharge_relay and s.air_plus:
        bad.append("precharge relay and AIR+ both closed")
    if s.air_plus and s.state != TS_ACTIVE:
        bad.append(f"AIR+ closed in {s.state.name}")
    if s.air_plus and s.v_link < cfg.precharge_ratio * pack_voltage - 1e-9:
        bad.append(f"AIR+ closed with link at {s.v_link:.2f} V")
    if s.state == FAULT and (s.air_minus or s.air_plus):
        bad.append("AIR closed in FAULT")
    return bad
