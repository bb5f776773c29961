"""Deterministic fixed-step simulator of a four-wheel-drive Formula Student
electric vehicle: virtual CAN buses, accumulator, drive units, VCU control
and the HV safety chain."""

from .kernels import BACKEND
from .codec import MessageDb, load_default_db, load_message_db
from .config import VehicleConfig, load_config, parse_config
from .scenario import Scenario, load_scenario, parse_scenario
from .harness import SimReport, Simulation, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "MessageDb", "load_default_db", "load_message_db", "VehicleConfig",
    "load_config", "parse_config", "Scenario", "load_scenario", "parse_scenario",
    "SimReport", "Simulation", "run_scenario",
]
