"""Vehicle configuration file: ``section.key = value`` lines, ``#`` comments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Dict, List

from .accumulator import CellSpec, PackConfig
from .drivetrain import InverterConfig, MotorSpec
from .safety import SafetyConfig
from .vcu import ControlConfig
from .vehicle import VehicleParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    tick_us: int = 1000
    # standard deviation of additive pedal noise; 0 keeps runs noise-free
    sensor_noise: float = 0.0
    seed: int = 0

    @property
    def dt(self) -> float:
        return self.tick_us / 1_000_000

    def check(self) -> None:
        if self.tick_us <= 0:
            raise ValueError("sim.tick_us must be a positive integer")
        if self.sensor_noise < 0:
            raise ValueError("sim.sensor_noise must be non-negative")


@dataclass(frozen=True)
class VehicleConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    pack: PackConfig = field(default_factory=PackConfig)
    cell: CellSpec = field(default_factory=CellSpec)
    motor: MotorSpec = field(default_factory=MotorSpec)
    inverter: InverterConfig = field(default_factory=InverterConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)

    def check(self) -> None:
        for f in dataclasses.fields(self):
            section = getattr(self, f.name)
            try:
                section.check()
            except ValueError as exc:
                raise ConfigError(f"[{f.name}] {exc}") from None
        if self.control.efficiency != self.inverter.efficiency:
            raise ConfigError("control.efficiency must equal inverter.efficiency")


SECTIONS = tuple(f.name for f in dataclasses.fields(VehicleConfig))


def _convert(section: str, key: str, kind, text: str, lineno: int):
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text, 0)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {text!r} for {section}.{key}") from None


def _field_types(cls) -> Dict[str, type]:
    hints = {"int": int, "float": float, "str": str, "bool": bool}
    return {f.name: hints.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
            for f in dataclasses.fields(cls)}


def parse_config(text: str) -> VehicleConfig:
    base = VehicleConfig()
    updates: Dict[str, Dict[str, object]] = {name: {} for name in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        lhs, value = (part.strip() for part in line.split("=", 1))
        if "." not in lhs:
            raise ConfigError(f"line {lineno}: key {lhs!r} has no section")
        section, key = lhs.split(".", 1)
        if section not in updates:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        types = _field_types(type(getattr(base, section)))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {section}.{key}")
        if key in updates[section]:
            raise ConfigError(f"line {lineno}: duplicate key {section}.{key}")
        updates[section][key] = _convert(section, key, types[key], value, lineno)

    sections = {}
    for name in SECTIONS:
        try:
            sections[name] = replace(getattr(base, name), **updates[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {exc}") from None
    if "efficiency" not in updates["control"]:
        sections["control"] = replace(sections["control"],
                                      efficiency=sections["inverter"].efficiency)
    cfg = VehicleConfig(**sections)
    cfg.check()
    return cfg


def load_config(path) -> VehicleConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config_text() -> str:
    return resources.files("fsevsim.data").joinpath("default.cfg").read_text()


def serialize_config(cfg: VehicleConfig) -> str:
    lines: List[str] = []
    for name in SECTIONS:
        section = getattr(cfg, name)
        for f in dataclasses.fields(section):
            value = getattr(section, f.name)
            lines.append(f"{name}.{f.name} = {value!r}" if isinstance(value, float)
                         else f"{name}.{f.name} = {value}")
    return "\n".join(lines) + "\n"
