"""Scenario files: driver trace plus timed events."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Sequence, Tuple

EVENT_ARITY = {
    "activate_ts": 0,
    "reset_fault": 0,
    "remove_hvd": 0,
    "open_loop": 0,
    "sensor_dropout": 2,
    "force_cell_temp": 1,
}

DROPOUT_CHANNELS = ("apps", "brake_pressure", "steering_angle", "hecs_current")
CHANNEL_ALIASES = {"pedal": "apps", "brake": "brake_pressure", "steering": "steering_angle",
                   "hecs": "hecs_current"}


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Event:
    t: float
    name: str
    args: Tuple = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    trace: Tuple[Tuple[float, float, float, float], ...] = ()
    events: Tuple[Event, ...] = ()


def _float(tok: str, line: int, what: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ScenarioError(f"bad {what} {tok!r}", line) from None
    if not math.isfinite(x):
        raise ScenarioError(f"non-finite {what}", line)
    return x


def parse_event(fields: Sequence[str], line: int = 0) -> Event:
    t = _float(fields[0], line, "event time")
    name = fields[1].strip() if len(fields) > 1 else ""
    if name not in EVENT_ARITY:
        raise ScenarioError(f"unknown event {name!r}", line)
    args = [a.strip() for a in fields[2:]]
    if len(args) != EVENT_ARITY[name]:
        raise ScenarioError(f"{name} takes {EVENT_ARITY[name]} argument(s), got {len(args)}", line)
    if name == "sensor_dropout":
        channel = CHANNEL_ALIASES.get(args[0], args[0])
        if channel not in DROPOUT_CHANNELS:
            raise ScenarioError(f"unknown sensor channel {args[0]!r}", line)
        duration = _float(args[1], line, "dropout duration")
        if duration < 0:
            raise ScenarioError("negative dropout duration", line)
        return Event(t, name, (channel, duration))
    if name == "force_cell_temp":
        return Event(t, name, (_float(args[0], line, "temperature"),))
    return Event(t, name)


def parse_scenario(text: str) -> Scenario:
    name = None
    duration = None
    section = None
    trace: List[Tuple[float, float, float, float]] = []
    events: List[Event] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low.startswith("name:"):
            name = line.split(":", 1)[1].strip()
            continue
        if low.startswith("duration:"):
            duration = _float(line.split(":", 1)[1].strip(), lineno, "duration")
            continue
        if low in ("trace:", "events:"):
            section = low[:-1]
            continue
        if section is None:
            raise ScenarioError(f"unexpected line {line!r}", lineno)
        fields = [f.strip() for f in line.split(",")]
        if section == "trace":
            if fields[0] == "t":
                continue  # column header
            if len(fields) != 4:
                raise ScenarioError("trace rows need t,pedal,brake_bar,steer_deg", lineno)
            row = tuple(_float(f, lineno, "trace value") for f in fields)
            if trace and row[0] < trace[-1][0]:
                raise ScenarioError("trace rows are not time-sorted", lineno)
            trace.append(row)
        else:
            if fields[0] == "t":
                continue
            ev = parse_event(fields, lineno)
            if events and ev.t < events[-1].t:
                raise ScenarioError("events are not time-sorted", lineno)
            events.append(ev)
    if name is None:
        raise ScenarioError("missing 'name:' header")
    if duration is None:
        raise ScenarioError("missing 'duration:' header")
    if duration < 0:
        raise ScenarioError("negative duration")
    return Scenario(name, duration, tuple(trace), tuple(events))


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def shipped_scenarios() -> Dict[str, Scenario]:
    """Scenarios bundled with the package, keyed by name."""
    out = {}
    for entry in sorted(resources.files("fsevsim.data").joinpath("scenarios").iterdir(),
                        key=lambda e: e.name):
        if entry.name.endswith(".scn"):
            sc = parse_scenario(entry.read_text())
            out[sc.name] = sc
    return out


def format_scenario(sc: Scenario) -> str:
    out = [f"name: {sc.name}", f"duration: {sc.duration!r}", "trace:", "t,pedal,brake_bar,steer_deg"]
    out += [",".join(repr(x) for x in row) for row in sc.trace]
    out.append("events:")
    for ev in sc.events:
        out.append(",".join([repr(ev.t), ev.name] + [str(a) for a in ev.args]))
    return "\n".join(out) + "\n"


class TraceSampler:
    """Linear interpolation over the driver trace, holding the end values."""

    def __init__(self, trace: Sequence[Tuple[float, float, float, float]]):
        self.times = [r[0] for r in trace]
        self.rows = list(trace)

    def __call__(self, t: float) -> Tuple[float, float, float]:
        rows = self.rows
        if not rows:
            return 0.0, 0.0, 0.0
        i = bisect_right(self.times, t)
        if i == 0:
            r = rows[0]
            return r[1], r[2], r[3]
        if i >= len(rows):
            r = rows[-1]
            return r[1], r[2], r[3]
        a, b = rows[i - 1], rows[i]
        span = b[0] - a[0]
        w = (t - a[0]) / span
        return (a[1] + (b[1] - a[1]) * w, a[2] + (b[2] - a[2]) * w, a[3] + (b[3] - a[3]) * w)
