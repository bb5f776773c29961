"""Accumulator model: 2P144S pack electrics, lumped thermal state, BMS checks."""

from __future__ import annotations

from array import array
from fractions import Fraction
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import kernels as K

J_PER_WH = 3600.0


@dataclass(frozen=True)
class CellSpec:
    max_continuous_discharge_a: float = 110.0
    peak_discharge_a: float = 137.5
    peak_duration_s: float = 3.0
    max_charge_a: float = 11.0
    peak_charge_a: float = 16.5
    cutoff_voltage: float = 3.0
    charge_voltage: float = 4.2
    discharge_temp_min: float = -20.0
    discharge_temp_max: float = 60.0
    charge_temp_min: float = 10.0
    charge_temp_max: float = 45.0
    capacity_ah: float = 5.5
    mass_kg: float = 0.116

    def check(self) -> None:
        if self.peak_discharge_a < self.max_continuous_discharge_a:
            raise ValueError("peak discharge current below continuous rating")
        if self.cutoff_voltage >= self.charge_voltage:
            raise ValueError("cutoff voltage must be below charge voltage")
        if self.capacity_ah <= 0:
            raise ValueError("capacity must be positive")


@dataclass(frozen=True)
class PackConfig:
    parallel: int = 2
    series: int = 144
    segment_series: int = 24
    nominal_cell_voltage: float = 3.7
    cell_resistance_ohm: float = 0.0025
    # full-charge OCV per group chosen so the pack reads 600 V
    ocv_full: float = 600.0 / 144
    ocv_empty: float = 3.0
    thermal_capacity_j_per_k: float = 5000.0
    thermal_resistance_k_per_w: float = 0.5
    ambient_c: float = 25.0
    loss_share: float = 1.0
    initial_soc: float = 1.0
    initial_temp_c: float = 25.0

    @property
    def total_cells(self) -> int:
        return self.parallel * self.series

    @property
    def segments(self) -> int:
        return self.series // self.segment_series

    @property
    def pack_resistance(self) -> float:
        return self.series * self.cell_resistance_ohm / self.parallel

    def check(self) -> None:
        if self.parallel < 1 or self.series < 1 or self.segment_series < 1:
            raise ValueError("pack counts must be positive")
        if self.series % self.segment_series:
            raise ValueError(
                f"series count {self.series} not divisible by segment series {self.segment_series}")
        if self.ocv_empty >= self.ocv_full:
            raise ValueError("empty OCV must be below full OCV")
        for name in ("nominal_cell_voltage", "thermal_capacity_j_per_k",
                     "thermal_resistance_k_per_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cell_resistance_ohm < 0:
            raise ValueError("cell resistance must be non-negative")
        if not 0.0 <= self.initial_soc <= 1.0:
            raise ValueError("initial SoC outside [0, 1]")


@dataclass(frozen=True)
class PackState:
    soc: float = 1.0
    current: float = 0.0
    terminal_voltage: float = 600.0
    segment_min_v: Tuple[float, ...] = ()
    segment_max_v: Tuple[float, ...] = ()
    hottest_cell_c: float = 25.0
    charge_ah: float = 0.0
    energy_wh: float = 0.0
    stored_energy_drop_wh: float = 0.0
    ohmic_loss_wh: float = 0.0
    overcurrent_s: float = 0.0
    undervoltage: bool = False
    time_s: float = 0.0

    @property
    def min_cell_voltage(self) -> float:
        return min(self.segment_min_v) if self.segment_min_v else self.terminal_voltage

    @property
    def max_cell_voltage(self) -> float:
        return max(self.segment_max_v) if self.segment_max_v else self.terminal_voltage


def pack_params(config: PackConfig, cell: CellSpec) -> array:
    p = array("d", [0.0] * K.PP_SIZE)
    p[K.PP_Q_AH] = config.parallel * cell.capacity_ah
    p[K.PP_SERIES] = config.series
    p[K.PP_OCV_EMPTY] = config.ocv_empty
    p[K.PP_OCV_FULL] = config.ocv_full
    p[K.PP_R_PACK] = config.pack_resistance
    p[K.PP_C_TH] = config.thermal_capacity_j_per_k
    p[K.PP_R_TH] = config.thermal_resistance_k_per_w
    p[K.PP_T_AMB] = config.ambient_c
    p[K.PP_LOSS_SHARE] = config.loss_share
    p[K.PP_CONT_LIMIT] = config.parallel * cell.max_continuous_discharge_a
    return p


def _exact_product(*factors: float) -> float:
    """Product of the factors as written in decimal, rounded once at the end."""
    out = Fraction(1)
    for x in factors:
        out *= Fraction(repr(float(x))) if isinstance(x, float) else Fraction(x)
    return float(out)


def pack_nominal_capacity(config: PackConfig, cell: CellSpec) -> float:
    """Nominal energy in Wh: cell count x nominal cell voltage x cell capacity.

    Evaluated on the decimal values as written so 288 x 3.7 x 5.5 is 5860.8,
    not the binary-rounded 5860.800000000001.
    """
    return _exact_product(config.total_cells, config.nominal_cell_voltage, cell.capacity_ah)


def c_rate(cell: CellSpec) -> float:
    if cell.capacity_ah <= 0:
        raise ValueError("capacity must be positive")
    return cell.max_continuous_discharge_a / cell.capacity_ah


def ohmic_loss(resistance: float, current: float) -> float:
    if resistance < 0:
        raise ValueError("resistance must be non-negative")
    return resistance * current * current


def open_circuit_voltage(soc: float, config: PackConfig) -> float:
    return K.ocv_cell(soc, config.ocv_empty, config.ocv_full) * config.series


def terminal_voltage(state: PackState, current: float, config: PackConfig) -> float:
    if not 0.0 <= state.soc <= 1.0:
        raise ValueError(f"SoC {state.soc} outside [0, 1]")
    return open_circuit_voltage(state.soc, config) - current * config.pack_resistance


def initial_state(config: PackConfig, cell: Optional[CellSpec] = None) -> PackState:
    v = open_circuit_voltage(config.initial_soc, config)
    group = v / config.series
    seg = (group,) * config.segments
    return PackState(soc=config.initial_soc, terminal_voltage=v, segment_min_v=seg,
                     segment_max_v=seg, hottest_cell_c=config.initial_temp_c)


def state_to_array(state: PackState) -> array:
    pk = array("d", [0.0] * K.PK_SIZE)
    pk[K.PK_SOC] = state.soc
    pk[K.PK_CURRENT] = state.current
    pk[K.PK_V_TERM] = state.terminal_voltage
    pk[K.PK_TEMP] = state.hottest_cell_c
    pk[K.PK_CHARGE_AH] = state.charge_ah
    pk[K.PK_ENERGY_WH] = state.energy_wh
    pk[K.PK_STORED_DROP_WH] = state.stored_energy_drop_wh
    pk[K.PK_OHMIC_WH] = state.ohmic_loss_wh
    pk[K.PK_OVERCURRENT_S] = state.overcurrent_s
    pk[K.PK_UNDERVOLT] = 1.0 if state.undervoltage else 0.0
    return pk


def array_to_state(pk, config: PackConfig, time_s: float) -> PackState:
    group = pk[K.PK_V_TERM] / config.series
    seg = (group,) * config.segments
    return PackState(
        soc=pk[K.PK_SOC], current=pk[K.PK_CURRENT], terminal_voltage=pk[K.PK_V_TERM],
        segment_min_v=seg, segment_max_v=seg, hottest_cell_c=pk[K.PK_TEMP],
        charge_ah=pk[K.PK_CHARGE_AH], energy_wh=pk[K.PK_ENERGY_WH],
        stored_energy_drop_wh=pk[K.PK_STORED_DROP_WH], ohmic_loss_wh=pk[K.PK_OHMIC_WH],
        overcurrent_s=pk[K.PK_OVERCURRENT_S], undervoltage=pk[K.PK_UNDERVOLT] > 0.5,
        time_s=time_s)


def step_pack(state: PackState, current: float, dt: float,
              config: PackConfig = PackConfig(), cell: CellSpec = CellSpec()) -> PackState:
    """Coulomb-counting step; SoC clamps at 0 and sets the undervoltage flag."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pk = state_to_array(state)
    K.pack_step(pk, float(current), float(dt), pack_params(config, cell))
    return array_to_state(pk, config, state.time_s + dt)


def stored_energy_wh(soc: float, config: PackConfig, cell: CellSpec = CellSpec()) -> float:
    return K.stored_energy_wh(soc, config.parallel * cell.capacity_ah, config.series,
                              config.ocv_empty, config.ocv_full)


# --- BMS -------------------------------------------------------------------

FAULT_NONE = 0
FAULT_UNDERVOLTAGE = 1
FAULT_OVERVOLTAGE = 2
FAULT_OVERTEMP = 3
FAULT_OVERCURRENT = 4
FAULT_UNDERTEMP = 5

FAULT_NAMES = {
    FAULT_NONE: "none",
    FAULT_UNDERVOLTAGE: "under-voltage",
    FAULT_OVERVOLTAGE: "over-voltage",
    FAULT_OVERTEMP: "over-temperature",
    FAULT_OVERCURRENT: "over-current",
    FAULT_UNDERTEMP: "under-temperature",
}


@dataclass(frozen=True)
class BmsDecision:
    open_airs: bool
    code: int = FAULT_NONE
    reason: str = "none"


BMS_OK = BmsDecision(False)


def bms_monitor(state: PackState, cell: CellSpec = CellSpec(),
                config: PackConfig = PackConfig()) -> BmsDecision:
    """Decide whether the AIRs must open; depends on ``state`` only."""
    return bms_evaluate(state.min_cell_voltage, state.max_cell_voltage, state.hottest_cell_c,
                        state.current, state.overcurrent_s, state.undervoltage, cell, config)


def bms_evaluate(min_v: float, max_v: float, temp_c: float, current: float,
                 overcurrent_s: float, undervoltage: bool, cell: CellSpec = CellSpec(),
                 config: PackConfig = PackConfig()) -> BmsDecision:
    """BMS limits on raw readings; :data:`BMS_OK` when nothing trips."""
    def fault(code, detail):
        return BmsDecision(True, code, f"{FAULT_NAMES[code]}: {detail}")

    if undervoltage or min_v < cell.cutoff_voltage:
        return fault(FAULT_UNDERVOLTAGE, f"{min_v:.4f} V < {cell.cutoff_voltage} V")
    if max_v > cell.charge_voltage:
        return fault(FAULT_OVERVOLTAGE, f"{max_v:.4f} V > {cell.charge_voltage} V")
    if temp_c > cell.discharge_temp_max:
        return fault(FAULT_OVERTEMP, f"{temp_c:.2f} C > {cell.discharge_temp_max} C")
    if temp_c < cell.discharge_temp_min:
        return fault(FAULT_UNDERTEMP, f"{temp_c:.2f} C < {cell.discharge_temp_min} C")
    peak = config.parallel * cell.peak_discharge_a
    if abs(current) > peak:
        return fault(FAULT_OVERCURRENT, f"{abs(current):.1f} A > peak {peak} A")
    if overcurrent_s > cell.peak_duration_s + 1e-9:
        return fault(FAULT_OVERCURRENT,
                     f"above {config.parallel * cell.max_continuous_discharge_a} A"
                     f" for {overcurrent_s:.3f} s")
    return BMS_OK


# --- rule checks -----------------------------------------------------------

SEGMENT_ENERGY_LIMIT_J = 6e6
SEGMENT_VOLTAGE_LIMIT_V = 120.0
PACK_VOLTAGE_LIMIT_V = 600.0


@dataclass(frozen=True)
class RuleCheck:
    rule: str
    quantity: str
    value: float
    limit: float
    unit: str

    @property
    def passed(self) -> bool:
        # relative slack absorbs float noise in products like 144 * (600 / 144)
        return self.value <= self.limit * (1 + 1e-12)

    def describe(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.rule} {self.quantity}: {self.value:.6g} {self.unit}"
                f" (limit {self.limit:.6g} {self.unit})")


@dataclass(frozen=True)
class RuleReport:
    checks: Tuple[RuleCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[RuleCheck]:
        return [c for c in self.checks if not c.passed]


def check_segment_rules(config: PackConfig, cell: CellSpec = CellSpec()) -> RuleReport:
    seg_cells = config.parallel * config.segment_series
    seg_energy_j = _exact_product(seg_cells, config.nominal_cell_voltage, cell.capacity_ah,
                                  J_PER_WH)
    seg_v = _exact_product(config.segment_series, cell.charge_voltage)
    pack_v = config.series * config.ocv_full
    return RuleReport((
        RuleCheck("EV5.3.2", "segment energy", seg_energy_j, SEGMENT_ENERGY_LIMIT_J, "J"),
        RuleCheck("EV5.3.2", "segment max voltage", seg_v, SEGMENT_VOLTAGE_LIMIT_V, "V"),
        RuleCheck("EV4.1.1", "pack max voltage", pack_v, PACK_VOLTAGE_LIMIT_V, "V"),
    ))

