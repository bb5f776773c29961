"""Backend selection for the per-tick kernels.

The compiled extension is used when it imports; otherwise the pure-Python
twin is loaded. Set ``FSEVSIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as _py
from ._kernels_py import (  # noqa: F401  layout constants are backend-independent
    INV_ENVELOPE,
    INV_EXHAUSTED,
    INV_IGBT_T,
    INV_MOTOR_T,
    INV_P_DC,
    INV_P_MECH,
    INV_STRIDE,
    INV_TIMER,
    INV_TORQUE,
    IP_BAND,
    IP_ETA,
    IP_IGBT_LIMIT,
    IP_IGBT_RISE,
    IP_LIMITER_BAND,
    IP_MOTOR_LIMIT,
    IP_MOTOR_RISE,
    IP_N_MAX,
    IP_P_MAX,
    IP_SIZE,
    IP_T_AMB,
    IP_T_MAX,
    IP_T_RATED,
    IP_TAU,
    IP_V_REF,
    IP_WINDOW,
    PK_CHARGE_AH,
    PK_CURRENT,
    PK_ENERGY_WH,
    PK_OHMIC_WH,
    PK_OVERCURRENT_S,
    PK_SIZE,
    PK_SOC,
    PK_STORED_DROP_WH,
    PK_TEMP,
    PK_UNDERVOLT,
    PK_V_TERM,
    PP_C_TH,
    PP_CONT_LIMIT,
    PP_LOSS_SHARE,
    PP_OCV_EMPTY,
    PP_OCV_FULL,
    PP_Q_AH,
    PP_R_PACK,
    PP_R_TH,
    PP_SERIES,
    PP_SIZE,
    PP_T_AMB,
    RPM_TO_RAD,
)

_NAMES = (
    "extract_bits",
    "insert_bits",
    "envelope_torque",
    "thermal_factor",
    "peak_window_step",
    "inverter_tick",
    "power_cap_factor",
    "ocv_cell",
    "stored_energy_wh",
    "current_for_power",
    "pack_step",
    "vehicle_step",
    "rc_step",
)


def _load():
    if os.environ.get("FSEVSIM_PURE_PYTHON") == "1":
        return _py, "python"
    try:
        from . import _kernels as compiled
    except ImportError:
        return _py, "python"
    return compiled, "compiled"


_backend, BACKEND = _load()

extract_bits = _backend.extract_bits
insert_bits = _backend.insert_bits
envelope_torque = _backend.envelope_torque
thermal_factor = _backend.thermal_factor
peak_window_step = _backend.peak_window_step
inverter_tick = _backend.inverter_tick
power_cap_factor = _backend.power_cap_factor
ocv_cell = _backend.ocv_cell
stored_energy_wh = _backend.stored_energy_wh
current_for_power = _backend.current_for_power
pack_step = _backend.pack_step
vehicle_step = _backend.vehicle_step
rc_step = _backend.rc_step
