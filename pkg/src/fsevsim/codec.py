"""CAN frames, the text message database, and bit-exact signal packing.

Database format, one record per line::

    msg <name> <id-hex> <dlc> <sender> <period_ticks>
      sig <name> <start_bit> <bit_len> <LE|BE> <scale> <offset> <min> <max> <unit>

Bit numbering: for ``LE`` signals ``start_bit`` is the least significant
bit of the value inside the payload read as a little-endian integer
(bit k is bit ``k % 8`` of byte ``k // 8``). For ``BE`` signals the payload
is read as a big-endian integer and bits are counted from the most
significant bit of byte 0; ``start_bit`` addresses the signal's MSB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from . import kernels

MAX_ID = 0x7FF
MAX_DLC = 8


class CodecError(ValueError):
    pass


class FrameError(CodecError):
    pass


class MessageDbError(CodecError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SignalRangeError(CodecError):
    pass


class DecodeError(CodecError):
    pass


class _Unmapped:
    __slots__ = ()

    def __repr__(self) -> str:
        return "UNMAPPED"

    def __bool__(self) -> bool:
        return False


#: returned by :func:`decode_frame` for identifiers the database does not know
UNMAPPED = _Unmapped()


@dataclass(frozen=True)
class CanFrame:
    id: int
    data: bytes = b""
    bus: str = ""
    timestamp: float = 0.0

    def __post_init__(self):
        if not isinstance(self.data, bytes):
            object.__setattr__(self, "data", bytes(self.data))
        self.validate()

    @property
    def dlc(self) -> int:
        return len(self.data)

    def validate(self) -> None:
        if not isinstance(self.id, int) or not 0 <= self.id <= MAX_ID:
            raise FrameError(f"identifier {self.id!r} is not an 11-bit id")
        if len(self.data) > MAX_DLC:
            raise FrameError(f"payload of {len(self.data)} bytes exceeds {MAX_DLC}")


@dataclass(frozen=True)
class SignalDef:
    name: str
    start_bit: int
    bit_length: int
    byte_order: str = "LE"
    scale: float = 1.0
    offset: float = 0.0
    minimum: float = 0.0
    maximum: float = 0.0
    unit: str = "-"

    @property
    def big_endian(self) -> bool:
        return self.byte_order == "BE"

    @property
    def raw_max(self) -> int:
        return (1 << self.bit_length) - 1

    def occupied_bits(self, dlc: int) -> set:
        """Physical (byte, bit) positions of this signal as ``byte * 8 + bit``."""
        if not self.big_endian:
            return set(range(self.start_bit, self.start_bit + self.bit_length))
        out = set()
        for i in range(self.start_bit, self.start_bit + self.bit_length):
            out.add((i // 8) * 8 + (7 - i % 8))
        return out

    def check(self) -> None:
        if self.byte_order not in ("LE", "BE"):
            raise CodecError(f"signal {self.name}: byte order must be LE or BE")
        if not 0 <= self.start_bit <= 63:
            raise CodecError(f"signal {self.name}: start bit {self.start_bit} outside 0..63")
        if not 1 <= self.bit_length <= 64:
            raise CodecError(f"signal {self.name}: length {self.bit_length} outside 1..64")
        if self.scale == 0 or not math.isfinite(self.scale):
            raise CodecError(f"signal {self.name}: scale must be finite and non-zero")
        if not (math.isfinite(self.offset) and math.isfinite(self.minimum)
                and math.isfinite(self.maximum)):
            raise CodecError(f"signal {self.name}: non-finite offset or bounds")
        if self.minimum > self.maximum:
            raise CodecError(f"signal {self.name}: min {self.minimum} > max {self.maximum}")


@dataclass(frozen=True)
class MessageDef:
    name: str
    frame_id: int
    dlc: int
    sender: str
    period_ticks: int
    signals: Tuple[SignalDef, ...] = ()
    _by_name: Dict[str, SignalDef] = field(default_factory=dict, compare=False, repr=False)
    _plan: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self._by_name.update({s.name: s for s in self.signals})
        # per-signal encode constants, in signal order
        self._plan.extend((s, s.name, s.minimum, s.maximum, s.offset, s.scale,
                           (1 << s.bit_length) - 1, s.start_bit, s.bit_length,
                           s.byte_order == "BE") for s in self.signals)

    def signal(self, name: str) -> SignalDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise CodecError(f"message {self.name} has no signal {name!r}") from None

    def check(self) -> None:
        if not 0 <= self.frame_id <= MAX_ID:
            raise CodecError(f"message {self.name}: id 0x{self.frame_id:X} is not 11-bit")
        if not 0 <= self.dlc <= MAX_DLC:
            raise CodecError(f"message {self.name}: dlc {self.dlc} outside 0..8")
        if self.period_ticks < 0:
            raise CodecError(f"message {self.name}: negative period")
        seen: Dict[int, str] = {}
        names = set()
        for sig in self.signals:
            sig.check()
            if sig.name in names:
                raise CodecError(f"message {self.name}: duplicate signal {sig.name}")
            names.add(sig.name)
            if sig.start_bit + sig.bit_length > self.dlc * 8:
                raise CodecError(
                    f"signal {sig.name} (bits {sig.start_bit}..{sig.start_bit + sig.bit_length - 1})"
                    f" exceeds dlc {self.dlc} of message {self.name}")
            for bit in sorted(sig.occupied_bits(self.dlc)):
                if bit in seen:
                    raise CodecError(
                        f"signals {seen[bit]} and {sig.name} overlap at bit {bit}"
                        f" in message {self.name}")
                seen[bit] = sig.name


class MessageDb:
    """Messages indexed by frame id and by name."""

    def __init__(self, messages: Iterable[MessageDef] = ()):
        self.by_id: Dict[int, MessageDef] = {}
        self.by_name: Dict[str, MessageDef] = {}
        for msg in messages:
            self.add(msg)

    def add(self, msg: MessageDef) -> None:
        msg.check()
        if msg.frame_id in self.by_id:
            raise CodecError(
                f"duplicate id 0x{msg.frame_id:03X} ({self.by_id[msg.frame_id].name}, {msg.name})")
        if msg.name in self.by_name:
            raise CodecError(f"duplicate message name {msg.name}")
        self.by_id[msg.frame_id] = msg
        self.by_name[msg.name] = msg

    def __len__(self) -> int:
        return len(self.by_id)

    def __iter__(self):
        return iter(sorted(self.by_id.values(), key=lambda m: m.frame_id))

    def __getitem__(self, key) -> MessageDef:
        table = self.by_id if isinstance(key, int) else self.by_name
        try:
            return table[key]
        except KeyError:
            raise CodecError(f"unknown message {key!r}") from None

    def __contains__(self, key) -> bool:
        return key in (self.by_id if isinstance(key, int) else self.by_name)


def _num(tok: str, line: int, what: str, conv=float):
    try:
        value = conv(tok, 0) if conv is int else conv(tok)
    except ValueError:
        raise MessageDbError(f"bad {what} {tok!r}", line) from None
    return value


def load_message_db(text: str) -> MessageDb:
    """Parse and validate database text; any problem rejects the whole file."""
    db = MessageDb()
    current = None  # (header fields, signal list, line)

    def flush():
        if current is None:
            return
        (name, fid, dlc, sender, period), sigs, line = current
        try:
            db.add(MessageDef(name, fid, dlc, sender, period, tuple(sigs)))
        except MessageDbError:
            raise
        except CodecError as exc:
            raise MessageDbError(str(exc), line) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        toks = body.split()
        if toks[0] == "msg":
            if len(toks) != 6:
                raise MessageDbError(f"msg needs 5 fields, got {len(toks) - 1}", lineno)
            flush()
            fid = _num(toks[2], lineno, "id", lambda t: int(t, 16))
            dlc = _num(toks[3], lineno, "dlc", int)
            period = _num(toks[5], lineno, "period", int)
            current = ((toks[1], fid, dlc, toks[4], period), [], lineno)
        elif toks[0] == "sig":
            if current is None:
                raise MessageDbError("sig before any msg", lineno)
            if not raw[:1].isspace():
                raise MessageDbError("sig lines must be indented", lineno)
            if len(toks) != 10:
                raise MessageDbError(f"sig needs 9 fields, got {len(toks) - 1}", lineno)
            if toks[4] not in ("LE", "BE"):
                raise MessageDbError(f"byte order must be LE or BE, got {toks[4]!r}", lineno)
            sig = SignalDef(
                name=toks[1],
                start_bit=_num(toks[2], lineno, "start bit", int),
                bit_length=_num(toks[3], lineno, "bit length", int),
                byte_order=toks[4],
                scale=_num(toks[5], lineno, "scale"),
                offset=_num(toks[6], lineno, "offset"),
                minimum=_num(toks[7], lineno, "min"),
                maximum=_num(toks[8], lineno, "max"),
                unit=toks[9],
            )
            current[1].append(sig)
        else:
            raise MessageDbError(f"unknown record {toks[0]!r}", lineno)
    flush()
    return db


def _fmt(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def serialize_message_db(db: MessageDb) -> str:
    """Canonical text: messages by ascending id, signals by start bit."""
    out: List[str] = []
    for msg in db:
        out.append(f"msg {msg.name} 0x{msg.frame_id:03X} {msg.dlc} {msg.sender} {msg.period_ticks}")
        for s in sorted(msg.signals, key=lambda s: (s.start_bit, s.name)):
            out.append(
                f"  sig {s.name} {s.start_bit} {s.bit_length} {s.byte_order} {_fmt(s.scale)}"
                f" {_fmt(s.offset)} {_fmt(s.minimum)} {_fmt(s.maximum)} {s.unit}")
    return "\n".join(out) + "\n"


def default_db_text() -> str:
    return resources.files("fsevsim.data").joinpath("default.msgdb").read_text()


def load_default_db() -> MessageDb:
    return load_message_db(default_db_text())


def to_raw(sig: SignalDef, physical: float) -> int:
    if not sig.minimum <= physical <= sig.maximum:
        raise SignalRangeError(
            f"{sig.name}={physical!r} outside [{sig.minimum}, {sig.maximum}] {sig.unit}")
    raw = math.floor((physical - sig.offset) / sig.scale + 0.5)
    if raw < 0:
        return 0
    if raw > sig.raw_max:
        return sig.raw_max
    return raw


def pack_signal(sig: SignalDef, physical: float) -> int:
    """Quantize ``physical`` to the signal's unsigned raw value (saturating)."""
    return to_raw(sig, physical)


def place_signal(sig: SignalDef, payload: int, raw: int, dlc: int) -> int:
    """Write ``raw`` into the integer form of a ``dlc``-byte payload."""
    return kernels.insert_bits(payload, sig.start_bit, sig.bit_length, sig.big_endian, dlc * 8, raw)


def _payload_int(data: bytes, big_endian: bool) -> int:
    return int.from_bytes(data, "big" if big_endian else "little")


def unpack_signal(sig: SignalDef, frame: CanFrame) -> float:
    nbits = frame.dlc * 8
    if sig.start_bit + sig.bit_length > nbits:
        raise DecodeError(
            f"frame 0x{frame.id:03X} has {frame.dlc} bytes, too short for signal {sig.name}")
    payload = _payload_int(frame.data, sig.big_endian)
    raw = kernels.extract_bits(payload, sig.start_bit, sig.bit_length, sig.big_endian, nbits)
    return raw * sig.scale + sig.offset


def encode_message(db: MessageDb, name: str, values: Mapping[str, float],
                   bus: str = "", timestamp: float = 0.0, saturate: bool = False) -> CanFrame:
    """Pack ``values`` into a frame; ``saturate`` clips to [min, max] instead of raising."""
    msg = db[name]
    known = msg._by_name
    if len(values) != len(known) or any(k not in known for k in values):
        extra = set(values) - set(known)
        if extra:
            raise CodecError(f"message {name} has no signal(s) {', '.join(sorted(extra))}")
    nbits = msg.dlc * 8
    le = 0
    be = 0
    floor = math.floor
    insert = kernels.insert_bits
    for sig, key, lo, hi, off, scale, raw_max, start, length, big in msg._plan:
        x = values.get(key)
        if x is None:
            raise CodecError(f"message {name}: missing signal {key}")
        if not lo <= x <= hi:
            if not saturate or x != x:
                to_raw(sig, x)  # raises with the standard message
            x = lo if x < lo else hi
        raw = floor((x - off) / scale + 0.5)
        if raw < 0:
            raw = 0
        elif raw > raw_max:
            raw = raw_max
        if big:
            be = insert(be, start, length, True, nbits, raw)
        else:
            le = insert(le, start, length, False, nbits, raw)
    data = (int(le).to_bytes(msg.dlc, "little") if le else bytes(msg.dlc))
    if be:
        data = bytes(a | b for a, b in zip(data, int(be).to_bytes(msg.dlc, "big")))
    return CanFrame(msg.frame_id, data, bus, timestamp)


def decode_frame(db: MessageDb, frame: CanFrame):
    """Signal map for a known id, :data:`UNMAPPED` otherwise."""
    msg = db.by_id.get(frame.id)
    if msg is None:
        return UNMAPPED
    if frame.dlc < msg.dlc:
        raise DecodeError(f"frame 0x{frame.id:03X} ({msg.name}) has {frame.dlc} bytes, needs {msg.dlc}")
    data = frame.data
    nbits = len(data) * 8
    le = int.from_bytes(data, "little")
    be = int.from_bytes(data, "big")
    extract = kernels.extract_bits
    out = {}
    for sig in msg.signals:
        if sig.byte_order == "BE":
            raw = extract(be, sig.start_bit, sig.bit_length, True, nbits)
        else:
            raw = extract(le, sig.start_bit, sig.bit_length, False, nbits)
        out[sig.name] = raw * sig.scale + sig.offset
    return out
