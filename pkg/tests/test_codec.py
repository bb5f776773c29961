import pytest
from hypothesis import given, settings, strategies as st

from fsevsim.codec import (UNMAPPED, CanFrame, CodecError, DecodeError, FrameError,
                           MessageDbError, SignalDef, SignalRangeError, decode_frame,
                           encode_message, load_default_db, load_message_db, pack_signal,
                           place_signal, serialize_message_db, unpack_signal)

DB = load_default_db()

MINIMAL = """
msg SPEED 0x123 2 INV 10
  sig speed 0 16 LE 1 0 0 65535 rpm
"""


def test_minimal_db():
    db = load_message_db(MINIMAL)
    assert len(db) == 1
    assert db[0x123].name == "SPEED"
    assert db["SPEED"].signal("speed").bit_length == 16


def test_overlap_names_both_signals():
    text = MINIMAL + "  sig other 8 8 LE 1 0 0 255 -\n"
    with pytest.raises(MessageDbError) as exc:
        load_message_db(text)
    assert "speed" in str(exc.value) and "other" in str(exc.value)
    assert exc.value.line == 2


@pytest.mark.parametrize("bad, fragment", [
    ("msg A 0x800 8 X 10\n", "11-bit"),
    ("msg A 0x100 9 X 10\n", "dlc"),
    ("msg A 0x100 1 X 10\n  sig s 0 9 LE 1 0 0 1 -\n", "exceeds dlc"),
    ("msg A 0x100 2 X 10\n  sig s 0 8 XE 1 0 0 1 -\n", "byte order"),
    ("msg A 0x100 2 X 10\n  sig s 0 8 LE 0 0 0 1 -\n", "scale"),
    ("msg A 0x100 2 X 10\n  sig s 0 8 LE 1 0 5 1 -\n", "min"),
    ("  sig s 0 8 LE 1 0 0 1 -\n", "before any msg"),
    ("msg A 0x100 2 X 10\nsig s 0 8 LE 1 0 0 1 -\n", "indented"),
    ("msg A 0x100 2 X 10\nmsg B 0x100 2 X 10\n", "duplicate id"),
    ("msg A 0x100 2 X\n", "5 fields"),
    ("frobnicate\n", "unknown record"),
])
def test_parser_rejects(bad, fragment):
    with pytest.raises(MessageDbError) as exc:
        load_message_db(bad)
    assert fragment in str(exc.value)


def test_default_db_fixpoint():
    once = serialize_message_db(DB)
    assert serialize_message_db(load_message_db(once)) == once


def test_pack_examples():
    torque = SignalDef("torque", 0, 16, "LE", 0.1, 0.0, 0.0, 100.0)
    assert pack_signal(torque, 9.8) == 98
    assert pack_signal(torque, 0.0) == 0
    rpm = SignalDef("speed", 0, 16, "LE", 1.0, 0.0, 0.0, 65535.0)
    raw = pack_signal(rpm, 12000)
    payload = place_signal(rpm, 0, raw, 2).to_bytes(2, "little")
    assert payload == bytes([0xE0, 0x2E])
    assert unpack_signal(rpm, CanFrame(0x10, payload)) == 12000
    assert unpack_signal(rpm, CanFrame(0x10, bytes(2))) == 0


def test_pack_out_of_range_and_saturation():
    sig = SignalDef("s", 0, 8, "LE", 1.0, 0.0, 0.0, 300.0)
    with pytest.raises(SignalRangeError):
        pack_signal(sig, 301)
    assert pack_signal(sig, 300) == 255


def test_big_endian_layout():
    # MSB-first numbering: start bit 0 is the top bit of byte 0
    sig = SignalDef("s", 0, 16, "BE", 1.0, 0.0, 0.0, 65535.0)
    db = load_message_db("msg M 0x001 2 X 0\n  sig s 0 16 BE 1 0 0 65535 -\n")
    assert encode_message(db, "M", {"s": 0x1234}).data == bytes([0x12, 0x34])
    assert unpack_signal(sig, CanFrame(1, bytes([0x12, 0x34]))) == 0x1234


def test_inverter_status_round_trip():
    values = {"speed": 12000, "torque": 9.8, "motor_temp": 40, "igbt_temp": 40, "dc_voltage": 600}
    frame = encode_message(DB, "INV_STATUS_FL", values, bus="can1")
    out = decode_frame(DB, frame)
    for name, x in values.items():
        assert abs(out[name] - x) <= DB["INV_STATUS_FL"].signal(name).scale / 2 + 1e-9


def test_decode_unknown_id():
    assert decode_frame(DB, CanFrame(0x7FF, b"")) is UNMAPPED


def test_decode_short_frame():
    with pytest.raises(DecodeError):
        decode_frame(DB, CanFrame(DB["BMS_PACK"].frame_id, b"\x00"))


def test_encode_missing_and_extra_signal():
    with pytest.raises(CodecError, match="torque_setpoint"):
        encode_message(DB, "VCU_SETPOINT_FL", {"power_limit": 0, "enable": 0})
    with pytest.raises(CodecError, match="bogus"):
        encode_message(DB, "VCU_SETPOINT_FL",
                       {"torque_setpoint": 0, "power_limit": 0, "enable": 0, "bogus": 1})


def test_frame_validation():
    with pytest.raises(FrameError):
        CanFrame(0x800, b"")
    with pytest.raises(FrameError):
        CanFrame(0x100, bytes(9))


@st.composite
def message_values(draw):
    msg = draw(st.sampled_from(list(DB)))
    values = {s.name: draw(st.floats(s.minimum, s.maximum)) for s in msg.signals}
    return msg, values


@settings(max_examples=300, deadline=None)
@given(message_values())
def test_encode_decode_identity(case):
    msg, values = case
    out = decode_frame(DB, encode_message(DB, msg.name, values))
    assert set(out) == set(values)
    for s in msg.signals:
        assert abs(out[s.name] - values[s.name]) <= s.scale / 2 * (1 + 1e-9) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 63), st.integers(1, 16), st.sampled_from(["LE", "BE"]), st.data())
def test_exact_raw_grid_round_trip(start, length, order, data):
    if start + length > 64:
        return
    sig = SignalDef("s", start, length, order, 1.0, 0.0, 0.0, float((1 << length) - 1))
    raw = data.draw(st.integers(0, (1 << length) - 1))
    payload = place_signal(sig, 0, pack_signal(sig, raw), 8)
    data_bytes = payload.to_bytes(8, "big" if order == "BE" else "little")
    assert unpack_signal(sig, CanFrame(1, data_bytes)) == raw
