"""Fixed-step scheduler wiring every node to the virtual buses.

Per tick the stages run in a fixed order::

    sensors -> vcu -> buses -> inverters -> pack -> safety -> vehicle -> logger

Frames sent during a tick are delivered one tick later, so the VCU always
acts on bus data and the inverters on setpoints from the previous tick.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import kernels as K
from .accumulator import (bms_evaluate, bms_monitor, check_segment_rules, initial_state,
                          pack_params, state_to_array)
from .bus import BusTopology, VirtualBus
from .codec import MessageDb, decode_frame, encode_message, load_default_db
from .config import VehicleConfig
from .drivetrain import DriveUnits, WHEELS
from .safety import (RED, TS_ACTIVE, BspdInputs, BspdState, ShutdownInputs, ShutdownState,
                     bspd_evaluate, hvd_remove, open_loop, step_shutdown, tsal_state)
from .scenario import Event, Scenario, TraceSampler
from .vcu import arbitrate_torque, validate_inputs

POWER_TOLERANCE = 1e-3
STAGES = ("sensors", "vcu", "buses", "inverters", "pack", "safety", "vehicle", "logger")

WHEEL_BUS = {"FL": "can1", "FR": "can1", "RL": "can2", "RR": "can2"}

TRACE_COLUMNS = (
    "t", "pedal", "brake_bar", "steer_deg", "ts_state", "tsal", "v_link", "pack_v", "pack_i",
    "soc", "cell_temp", "speed_mps", "motor_rpm", "t_fl", "t_fr", "t_rl", "t_rr",
    "t_cmd_fl", "t_cmd_fr", "t_cmd_rl", "t_cmd_rr", "p_dc", "p_mech", "distance_m",
)


class SimulationError(RuntimeError):
    pass


def build_topology() -> BusTopology:
    topo = BusTopology()
    topo.attach("VCU", "can1", "can2", "can3", "can4")
    for w in WHEELS:
        topo.attach(f"INV_{w}", WHEEL_BUS[w])
    topo.attach("PDM", "can3")
    topo.attach("BMS", "can4")
    topo.attach("LOGGER", "can1", "can2", "can3", "can4")
    return topo


@dataclass
class Violation:
    tick: int
    t: float
    rule: str
    detail: str

    def __str__(self) -> str:
        where = f"t={self.t:.6f}s (tick {self.tick})" if self.tick >= 0 else "config"
        return f"{self.rule} {where}: {self.detail}"


@dataclass
class SimReport:
    scenario: str
    duration_s: float
    ticks: int
    energy_wh: float = 0.0
    stored_energy_drop_wh: float = 0.0
    mech_work_wh: float = 0.0
    drivetrain_loss_wh: float = 0.0
    ohmic_loss_wh: float = 0.0
    peak_dc_power_w: float = 0.0
    peak_dc_power_t: float = 0.0
    peak_wheel_torque_nm: float = 0.0
    peak_pack_voltage_v: float = 0.0
    max_motor_rpm: float = 0.0
    final_soc: float = 1.0
    distance_m: float = 0.0
    final_speed_mps: float = 0.0
    ts_active_s: float = 0.0
    final_ts_state: str = "TS_OFF"
    bms_trips: List[str] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    trace_path: Optional[str] = None
    log_path: Optional[str] = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary_rows(self) -> List[Tuple[str, str]]:
        return [
            ("scenario", self.scenario),
            ("duration_s", f"{self.duration_s:.6f}"),
            ("ticks", str(self.ticks)),
            ("energy_wh", f"{self.energy_wh:.6f}"),
            ("stored_energy_drop_wh", f"{self.stored_energy_drop_wh:.6f}"),
            ("mech_work_wh", f"{self.mech_work_wh:.6f}"),
            ("drivetrain_loss_wh", f"{self.drivetrain_loss_wh:.6f}"),
            ("ohmic_loss_wh", f"{self.ohmic_loss_wh:.6f}"),
            ("peak_dc_power_w", f"{self.peak_dc_power_w:.3f}"),
            ("peak_dc_power_t", f"{self.peak_dc_power_t:.6f}"),
            ("peak_wheel_torque_nm", f"{self.peak_wheel_torque_nm:.6f}"),
            ("peak_pack_voltage_v", f"{self.peak_pack_voltage_v:.4f}"),
            ("max_motor_rpm", f"{self.max_motor_rpm:.3f}"),
            ("final_soc", f"{self.final_soc:.8f}"),
            ("distance_m", f"{self.distance_m:.4f}"),
            ("final_speed_mps", f"{self.final_speed_mps:.6f}"),
            ("ts_active_s", f"{self.ts_active_s:.6f}"),
            ("final_ts_state", self.final_ts_state),
            ("bms_trips", str(len(self.bms_trips))),
            ("violations", str(len(self.violations))),
        ]

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario}"]
        lines += [f"  {k:<24} {v}" for k, v in self.summary_rows()[1:]]
        for trip in self.bms_trips:
            lines.append(f"  bms trip: {trip}")
        if self.violations:
            lines.append("rule violations:")
            lines += [f"  {v}" for v in self.violations]
        else:
            lines.append("rule violations: none")
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return "key,value\n" + "".join(f"{k},{v}\n" for k, v in self.summary_rows())


class Simulation:
    """One scenario run; owns every node state, the buses and the outputs."""

    def __init__(self, scenario: Scenario, config: VehicleConfig = VehicleConfig(),
                 db: Optional[MessageDb] = None, seed: Optional[int] = None,
                 record_trace: bool = True, keep_log: bool = True,
                 stage_order: Sequence[str] = STAGES):
        if sorted(stage_order) != sorted(STAGES):
            raise SimulationError(f"stage order must be a permutation of {STAGES}")
        phys = [s for s in stage_order if s != "logger"]
        if tuple(phys) != tuple(s for s in STAGES if s != "logger"):
            raise SimulationError("only the logger stage may move")
        self.scenario = scenario
        self.cfg = config
        self.db = db if db is not None else load_default_db()
        self.dt = config.sim.dt
        self.n_ticks = int(round(scenario.duration * 1_000_000 / config.sim.tick_us))
        self.stage_order = tuple(stage_order)
        self.bus = VirtualBus(build_topology(), config.sim.tick_us)
        self.bus.keep_log = keep_log
        self.record_trace = record_trace
        self.trace_rows: List[str] = []
        self.tick = 0

        noise_seed = config.sim.seed if seed is None else seed
        self.rng = random.Random(noise_seed)
        self.sampler = TraceSampler(scenario.trace)
        self.events = list(scenario.events)
        self._event_idx = 0

        self._period = {m.name: m.period_ticks for m in self.db}
        self._periodic = [(n, p) for n, p in self._period.items() if p > 0]
        self._due_tick = -1
        self._due_now = set()
        self._setpoint_msgs = [f"VCU_SETPOINT_{w}" for w in WHEELS]
        self._status_msgs = [f"INV_STATUS_{w}" for w in WHEELS]

        # sensors / PDM
        self.driver = (0.0, 0.0, 0.0)
        self.dropouts: Dict[str, int] = {}   # channel -> last tick of dropout
        self.frozen: Dict[str, float] = {}   # channel -> last transmitted value
        self.last_sent: Dict[str, float] = {}

        # VCU view of the network
        self.vcu_view = {"apps": 0.0, "brake_pressure": 0.0, "steering_angle": 0.0,
                         "speed": [0.0] * 4, "dc_voltage": 0.0, "max_cell_temp": 25.0,
                         "ts_state": 0}
        self.vcu_latch = False
        self.command = None

        # drive units
        self.drive = DriveUnits(config.motor, config.inverter)
        self.enable = [0.0] * 4

        # pack / BMS
        self.pack_params = pack_params(config.pack, config.cell)
        self.pack = state_to_array(initial_state(config.pack, config.cell))
        self.bms = bms_monitor(initial_state(config.pack, config.cell), config.cell, config.pack)
        self._bms_was_open = False

        # safety
        self.shutdown = ShutdownState(v_link=0.0)
        self.bspd = BspdState()
        self._activate = False
        self._reset = False

        # vehicle
        self.v = 0.0
        self.motor_rpm = 0.0
        self.distance = 0.0

        self.report = SimReport(scenario.name, scenario.duration, self.n_ticks)
        for chk in check_segment_rules(config.pack, config.cell).failures:
            self.report.violations.append(Violation(-1, 0.0, chk.rule, chk.describe()))

    # --- helpers -----------------------------------------------------------

    def _due(self, msg: str) -> bool:
        if self._due_tick != self.tick:
            self._due_tick = self.tick
            self._due_now = {n for n, p in self._periodic if self.tick % p == 0}
        return msg in self._due_now

    def _send(self, node: str, bus: str, msg: str, values: Dict[str, float]) -> None:
        self.bus.transmit(node, bus, encode_message(self.db, msg, values, saturate=True))

    @property
    def t(self) -> float:
        return self.bus.time_of(self.tick)

    # --- fault injection -----------------------------------------------------

    def inject(self, event: Event) -> None:
        name = event.name
        if name == "activate_ts":
            self._activate = True
        elif name == "reset_fault":
            self._reset = True
        elif name == "remove_hvd":
            self.shutdown = hvd_remove(self.shutdown)
        elif name == "open_loop":
            self.shutdown = open_loop(self.shutdown)
        elif name == "sensor_dropout":
            channel, duration = event.args
            ticks = int(round(duration * 1_000_000 / self.cfg.sim.tick_us))
            self.dropouts[channel] = self.tick + ticks
            if channel not in self.frozen:
                self.frozen[channel] = self.last_sent.get(channel, 0.0)
        elif name == "force_cell_temp":
            self.pack[K.PK_TEMP] = float(event.args[0])
        else:
            raise SimulationError(f"unknown event {name!r}")

    def _apply_events(self) -> None:
        while self._event_idx < len(self.events):
            ev = self.events[self._event_idx]
            ev_tick = int(round(ev.t * 1_000_000 / self.cfg.sim.tick_us))
            if ev_tick > self.tick:
                break
            self.inject(ev)
            self._event_idx += 1

    # --- stages ----------------------------------------------------------------

    def _channel(self, channel: str, live: float) -> float:
        until = self.dropouts.get(channel)
        if until is not None:
            if self.tick < until:
                return self.frozen[channel]
            del self.dropouts[channel]
            self.frozen.pop(channel, None)
        return live

    def stage_sensors(self) -> None:
        pedal, brake, steer = self.sampler(self.t)
        if self.cfg.sim.sensor_noise > 0:
            pedal += self.rng.gauss(0.0, self.cfg.sim.sensor_noise)
        self.driver = (pedal, brake, steer)
        if self._due("PDM_DRIVER"):
            vals = {"apps": self._channel("apps", pedal),
                    "brake_pressure": self._channel("brake_pressure", brake),
                    "steering_angle": self._channel("steering_angle", steer)}
            self.last_sent.update(vals)
            self._send("PDM", "can3", "PDM_DRIVER", vals)
        if self._due("PDM_HECS"):
            vals = {"hecs_current": self._channel("hecs_current", self.pack[K.PK_CURRENT]),
                    "brake_front": brake}
            self.last_sent["hecs_current"] = vals["hecs_current"]
            self._send("PDM", "can3", "PDM_HECS", vals)
        if self._due("SCS_STATUS"):
            s = self.shutdown
            self._send("PDM", "can3", "SCS_STATUS", {
                "ts_state": int(s.state), "tsal_red": tsal_state(s, self.cfg.safety) == RED,
                "air_minus": s.air_minus, "air_plus": s.air_plus,
                "precharge_relay": s.precharge_relay, "bspd_latched": s.bspd_latched,
                "hvd_present": s.hvd_present, "loop_closed": s.loop_closed,
                "fault_latched": s.fault_latched, "v_link": s.v_link})

    def stage_vcu(self) -> None:
        view = self.vcu_view
        for d in self.bus.receive("VCU"):
            name = self.db.by_id.get(d.frame.id)
            if name is None:
                continue
            sigs = decode_frame(self.db, d.frame)
            mname = name.name
            if mname == "PDM_DRIVER":
                view["apps"] = sigs["apps"]
                view["brake_pressure"] = sigs["brake_pressure"]
                view["steering_angle"] = sigs["steering_angle"]
            elif mname.startswith("INV_STATUS_"):
                view["speed"][WHEELS.index(mname[-2:])] = sigs["speed"]
                view["dc_voltage"] = sigs["dc_voltage"]
            elif mname == "BMS_CELLS":
                view["max_cell_temp"] = sigs["max_cell_temp"]
            elif mname == "SCS_STATUS":
                view["ts_state"] = int(round(sigs["ts_state"]))
        if not self._due(self._setpoint_msgs[0]):
            return
        cc = self.cfg.control
        inputs = validate_inputs(view["apps"], view["brake_pressure"], view["steering_angle"],
                                 self.vcu_latch, cc)
        self.vcu_latch = inputs.torque_cut
        cmd = arbitrate_torque(inputs, view["speed"], view["dc_voltage"], view["max_cell_temp"],
                               self.cfg.motor, cc)
        self.command = cmd
        enable = 1.0 if view["ts_state"] == int(TS_ACTIVE) else 0.0
        for i, w in enumerate(WHEELS):
            self._send("VCU", WHEEL_BUS[w], self._setpoint_msgs[i], {
                "torque_setpoint": cmd.torques[i] * enable,
                "power_limit": cmd.power_limits[i] * enable,
                "enable": enable})

    def stage_buses(self) -> None:
        self.bus.step_bus(self.tick)
        self.bus.receive("LOGGER")

    def stage_inverters(self) -> None:
        drive = self.drive
        for i, w in enumerate(WHEELS):
            for d in self.bus.receive(f"INV_{w}"):
                if d.frame.id != self.db[self._setpoint_msgs[i]].frame_id:
                    continue
                sigs = decode_frame(self.db, d.frame)
                en = sigs["enable"] > 0.5
                drive.setpoint[i] = sigs["torque_setpoint"] if en else 0.0
                drive.power_limit[i] = sigs["power_limit"] if en else 0.0
        s = self.shutdown
        total = drive.step(self.motor_rpm, s.v_link, s.hv_connected, self.dt)
        rep = self.report
        if total > rep.peak_dc_power_w:
            rep.peak_dc_power_w = total
            rep.peak_dc_power_t = self.t
        st = drive.state
        for i in range(4):
            tq = st[i * K.INV_STRIDE + K.INV_TORQUE]
            if tq > rep.peak_wheel_torque_nm:
                rep.peak_wheel_torque_nm = tq
        p_mech = (st[K.INV_P_MECH] + st[K.INV_STRIDE + K.INV_P_MECH]
                  + st[2 * K.INV_STRIDE + K.INV_P_MECH] + st[3 * K.INV_STRIDE + K.INV_P_MECH])
        rep.mech_work_wh += p_mech * self.dt / 3600.0
        rep.drivetrain_loss_wh += (total - p_mech) * self.dt / 3600.0
        cap = self.cfg.control.power_cap_w
        if total > cap * (1.0 + POWER_TOLERANCE):
            rep.violations.append(Violation(self.tick, self.t, "power-cap",
                                            f"DC power {total:.1f} W > {cap:.0f} W"))
        for i, w in enumerate(WHEELS):
            if self._due(self._status_msgs[i]):
                b = i * K.INV_STRIDE
                self._send(f"INV_{w}", WHEEL_BUS[w], self._status_msgs[i], {
                    "speed": self.motor_rpm, "torque": st[b + K.INV_TORQUE],
                    "motor_temp": st[b + K.INV_MOTOR_T], "igbt_temp": st[b + K.INV_IGBT_T],
                    "dc_voltage": s.v_link})

    def stage_pack(self) -> None:
        pk = self.pack
        pp = self.pack_params
        if self.shutdown.hv_connected:
            ocv = K.ocv_cell(pk[K.PK_SOC], pp[K.PP_OCV_EMPTY], pp[K.PP_OCV_FULL]) * pp[K.PP_SERIES]
            current = K.current_for_power(self.drive.total_dc_w, ocv, pp[K.PP_R_PACK])
        else:
            current = 0.0
        K.pack_step(pk, current, self.dt, pp)
        v = pk[K.PK_V_TERM]
        rep = self.report
        if self.shutdown.hv_connected and v > rep.peak_pack_voltage_v:
            rep.peak_pack_voltage_v = v
        group = v / self.cfg.pack.series
        self.bms = bms_evaluate(group, group, pk[K.PK_TEMP], pk[K.PK_CURRENT],
                                pk[K.PK_OVERCURRENT_S], pk[K.PK_UNDERVOLT] > 0.5,
                                self.cfg.cell, self.cfg.pack)
        if self.bms.open_airs and not self._bms_was_open:
            rep.bms_trips.append(f"t={self.t:.6f}s {self.bms.reason}")
        self._bms_was_open = self.bms.open_airs
        if self._due("BMS_PACK"):
            self._send("BMS", "can4", "BMS_PACK", {
                "pack_voltage": v,
                "pack_current": pk[K.PK_CURRENT], "soc": pk[K.PK_SOC],
                "fault_code": self.bms.code})
        if self._due("BMS_CELLS"):
            self._send("BMS", "can4", "BMS_CELLS", {
                "min_cell_voltage": group, "max_cell_voltage": group,
                "max_cell_temp": pk[K.PK_TEMP], "min_cell_temp": pk[K.PK_TEMP]})

    def stage_safety(self) -> None:
        s = self.shutdown
        if self._reset:
            self.bspd = BspdState()
        self.bspd = bspd_evaluate(self.bspd, BspdInputs(self.driver[1], self.pack[K.PK_CURRENT],
                                                        s.v_link), self.dt, self.cfg.safety)
        inputs = ShutdownInputs(pack_voltage=self.pack[K.PK_V_TERM], activate=self._activate,
                                reset=self._reset, bms_fault=self.bms.open_airs,
                                bspd_latched=self.bspd.latched)
        self.shutdown = step_shutdown(s, inputs, self.dt, self.cfg.safety)
        self._activate = False
        self._reset = False
        if self.shutdown.state == TS_ACTIVE:
            self.report.ts_active_s += self.dt

    def stage_vehicle(self) -> None:
        vp = self.cfg.vehicle
        st = self.drive.state
        torque_sum = (st[K.INV_TORQUE] + st[K.INV_STRIDE + K.INV_TORQUE]
                      + st[2 * K.INV_STRIDE + K.INV_TORQUE] + st[3 * K.INV_STRIDE + K.INV_TORQUE])
        v0 = self.v
        self.v, self.motor_rpm = K.vehicle_step(
            v0, torque_sum, max(0.0, self.driver[1]), self.dt, vp.mass_kg, vp.wheel_radius_m,
            vp.gear_ratio, vp.cda_m2, vp.air_density, vp.brake_gain_n_per_bar)
        self.distance += 0.5 * (v0 + self.v) * self.dt
        if self.motor_rpm > self.report.max_motor_rpm:
            self.report.max_motor_rpm = self.motor_rpm

    def stage_logger(self) -> None:
        if not self.record_trace:
            return
        pk = self.pack
        st = self.drive.state
        s = self.shutdown
        cmd = self.command.torques if self.command is not None else (0.0, 0.0, 0.0, 0.0)
        p_mech = sum(st[i * K.INV_STRIDE + K.INV_P_MECH] for i in range(4))
        row = (
            f"{self.t:.6f},{self.driver[0]:.6f},{self.driver[1]:.6f},{self.driver[2]:.6f},"
            f"{s.state.name},{tsal_state(s, self.cfg.safety)},{s.v_link:.6f},"
            f"{pk[K.PK_V_TERM]:.6f},{pk[K.PK_CURRENT]:.6f},{pk[K.PK_SOC]:.9f},"
            f"{pk[K.PK_TEMP]:.6f},{self.v:.6f},{self.motor_rpm:.6f},"
            f"{st[K.INV_TORQUE]:.6f},{st[K.INV_STRIDE + K.INV_TORQUE]:.6f},"
            f"{st[2 * K.INV_STRIDE + K.INV_TORQUE]:.6f},{st[3 * K.INV_STRIDE + K.INV_TORQUE]:.6f},"
            f"{cmd[0]:.6f},{cmd[1]:.6f},{cmd[2]:.6f},{cmd[3]:.6f},"
            f"{self.drive.total_dc_w:.6f},{p_mech:.6f},{self.distance:.6f}")
        self.trace_rows.append(row)

    # --- driver ------------------------------------------------------------------

    def step(self) -> None:
        self.bus.begin_tick(self.tick)
        self._apply_events()
        for stage in self.stage_order:
            getattr(self, "stage_" + stage)()
        self.tick += 1

    def run(self) -> SimReport:
        stages = [getattr(self, "stage_" + s) for s in self.stage_order]
        begin = self.bus.begin_tick
        for _ in range(self.n_ticks):
            begin(self.tick)
            self._apply_events()
            for stage in stages:
                stage()
            self.tick += 1
        return self.finish()

    def finish(self) -> SimReport:
        rep = self.report
        pk = self.pack
        rep.energy_wh = pk[K.PK_ENERGY_WH]
        rep.stored_energy_drop_wh = pk[K.PK_STORED_DROP_WH]
        rep.ohmic_loss_wh = pk[K.PK_OHMIC_WH]
        rep.final_soc = pk[K.PK_SOC]
        rep.distance_m = self.distance
        rep.final_speed_mps = self.v
        rep.final_ts_state = self.shutdown.state.name
        if rep.peak_pack_voltage_v > 600.0 + 1e-9:
            rep.violations.append(Violation(-1, 0.0, "EV4.1.1",
                                            f"pack voltage {rep.peak_pack_voltage_v:.3f} V > 600 V"))
        return rep

    def trace_csv(self) -> str:
        return ",".join(TRACE_COLUMNS) + "\n" + "".join(r + "\n" for r in self.trace_rows)

    def can_log(self) -> str:
        return "".join(line + "\n" for line in self.bus.log)


def inject_fault(event: Event, sim: Simulation) -> Simulation:
    sim.inject(event)
    return sim


def run_scenario(scenario: Scenario, config: VehicleConfig = VehicleConfig(),
                 out_dir: Optional[str] = None, seed: Optional[int] = None,
                 db: Optional[MessageDb] = None, record_trace: bool = True,
                 keep_log: bool = True, stage_order: Sequence[str] = STAGES):
    """Run a scenario to completion; writes outputs when ``out_dir`` is given.

    Returns ``(report, sim)`` so callers can inspect the final node states.
    """
    sim = Simulation(scenario, config, db=db, seed=seed, record_trace=record_trace,
                     keep_log=keep_log, stage_order=stage_order)
    report = sim.run()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_path = os.path.join(out_dir, "can.log")
        trace_path = os.path.join(out_dir, "trace.csv")
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(sim.can_log())
        with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(sim.trace_csv())
        report.log_path = log_path
        report.trace_path = trace_path
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_text())
        with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_csv())
    return report, sim
