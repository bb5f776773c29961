"""Virtual CAN buses with one-tick delivery and identifier arbitration."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Set, Tuple

from .codec import CanFrame, FrameError

DEFAULT_BUSES = ("can1", "can2", "can3", "can4")


class BusError(RuntimeError):
    pass


class LogFormatError(ValueError):
    pass


@dataclass
class BusTopology:
    buses: Tuple[str, ...] = DEFAULT_BUSES
    attachments: Dict[str, Set[str]] = field(default_factory=dict)

    def attach(self, node: str, *buses: str) -> None:
        for bus in buses:
            if bus not in self.buses:
                raise BusError(f"unknown bus {bus!r}")
            self.attachments.setdefault(node, set()).add(bus)

    def is_attached(self, node: str, bus: str) -> bool:
        return bus in self.attachments.get(node, ())

    def nodes_on(self, bus: str) -> List[str]:
        return sorted(n for n, b in self.attachments.items() if bus in b)


@dataclass(frozen=True)
class Delivery:
    sender: str
    frame: CanFrame


class VirtualBus:
    """All buses of one vehicle network, stepped once per tick.

    Frames transmitted during tick ``t`` are delivered by ``step_bus(t + 1)``
    to every attached node except the sender, in ascending id order with
    ties broken by sender name.
    """

    def __init__(self, topology: BusTopology, tick_us: int = 1000):
        if tick_us <= 0:
            raise BusError("tick length must be positive")
        self.topology = topology
        self.tick_us = tick_us
        self.tick = 0
        self._queued: List[Tuple[int, str, int, str, CanFrame]] = []
        self._inbox: Dict[str, List[Delivery]] = defaultdict(list)
        self._receivers = {b: topology.nodes_on(b) for b in topology.buses}
        self.log: List[str] = []
        self.keep_log = True

    def time_of(self, tick: int) -> float:
        # integer numerator keeps the stamp equal to its 6-decimal log rendering
        return tick * self.tick_us / 1_000_000

    def begin_tick(self, tick: int) -> None:
        """Set the tick used to stamp frames transmitted from now on."""
        self.tick = tick

    def transmit(self, node: str, bus: str, frame: CanFrame) -> CanFrame:
        if not self.topology.is_attached(node, bus):
            raise BusError(f"node {node} is not attached to {bus}")
        stamped = CanFrame(frame.id, frame.data, bus, self.time_of(self.tick))
        self._queued.append((self.tick, bus, frame.id, node, stamped))
        return stamped

    def step_bus(self, tick: int) -> Dict[str, List[Delivery]]:
        """Deliver everything queued before ``tick``; returns deliveries per bus."""
        self.tick = tick
        due = [q for q in self._queued if q[0] < tick]
        if not due:
            return {}
        self._queued = [q for q in self._queued if q[0] >= tick]
        # stable sort keeps transmit order for identical (id, sender)
        due.sort(key=lambda q: (q[1], q[2], q[3]))
        out: Dict[str, List[Delivery]] = {}
        for _, bus, _, sender, frame in due:
            d = Delivery(sender, frame)
            out.setdefault(bus, []).append(d)
            for node in self._receivers[bus]:
                if node != sender:
                    self._inbox[node].append(d)
            if self.keep_log:
                self.log.append(format_log_line(frame))
        return out

    def receive(self, node: str) -> List[Delivery]:
        """Drain and return the node's inbox."""
        items = self._inbox.pop(node, None)
        return items if items is not None else []

    def pending(self) -> int:
        return len(self._queued)


def format_log_line(frame: CanFrame) -> str:
    return f"({frame.timestamp:.6f}) {frame.bus} {frame.id:03X}#{frame.data.hex().upper()}"


def write_log(frames: Iterable[CanFrame]) -> List[str]:
    return [format_log_line(f) for f in frames]


_LOG_RE = re.compile(r"^\((\d+\.\d{6})\) (\S+) ([0-9A-Fa-f]{3})#((?:[0-9A-Fa-f]{2}){0,8})$")


def parse_log_line(line: str, lineno: int = 0) -> CanFrame:
    m = _LOG_RE.match(line.strip())
    if not m:
        raise LogFormatError(f"line {lineno}: not a bus log record: {line.strip()!r}")
    try:
        return CanFrame(int(m.group(3), 16), bytes.fromhex(m.group(4)), m.group(2),
                        float(m.group(1)))
    except FrameError as exc:
        raise LogFormatError(f"line {lineno}: {exc}") from None


def read_log(lines: Iterable[str]) -> List[CanFrame]:
    frames = []
    for n, line in enumerate(lines, start=1):
        if line.strip():
            frames.append(parse_log_line(line, n))
    return frames
