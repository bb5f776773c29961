import pytest
from hypothesis import given, settings, strategies as st

from fsevsim.bus import (BusError, BusTopology, LogFormatError, VirtualBus, format_log_line,
                         parse_log_line, read_log, write_log)
from fsevsim.codec import CanFrame


def make_bus():
    topo = BusTopology()
    topo.attach("VCU", "can1", "can3", "can4")
    topo.attach("INV_FL", "can1")
    topo.attach("PDM", "can3")
    topo.attach("BMS", "can4")
    topo.attach("AUX", "can3", "can4")
    return VirtualBus(topo)


def test_one_tick_latency():
    bus = make_bus()
    bus.begin_tick(0)
    bus.transmit("VCU", "can1", CanFrame(0x184, b"\x01"))
    assert bus.step_bus(0) == {}
    assert bus.receive("INV_FL") == []
    delivered = bus.step_bus(1)
    assert [d.frame.id for d in delivered["can1"]] == [0x184]
    [d] = bus.receive("INV_FL")
    assert d.sender == "VCU" and d.frame.bus == "can1" and d.frame.timestamp == 0.0


def test_unattached_bus_rejected():
    bus = make_bus()
    with pytest.raises(BusError):
        bus.transmit("INV_FL", "can3", CanFrame(0x100))


def test_lower_id_wins():
    bus = make_bus()
    bus.transmit("PDM", "can3", CanFrame(0x101))
    bus.transmit("AUX", "can3", CanFrame(0x090))
    assert [d.frame.id for d in bus.step_bus(1)["can3"]] == [0x090, 0x101]


def test_sorted_delivery_and_no_self_reception():
    bus = make_bus()
    for fid in (0x300, 0x200, 0x100):
        bus.transmit("BMS", "can4", CanFrame(fid))
    bus.step_bus(1)
    assert [d.frame.id for d in bus.receive("VCU")] == [0x100, 0x200, 0x300]
    assert bus.receive("BMS") == []


def test_empty_step():
    assert make_bus().step_bus(5) == {}


def test_log_format():
    f = CanFrame(0x184, bytes([0xDE, 0xAD]), "can1", 1.234567)
    assert format_log_line(f) == "(1.234567) can1 184#DEAD"
    assert format_log_line(CanFrame(0x100, b"", "can3", 0.001)) == "(0.001000) can3 100#"


def test_log_round_trip_and_determinism():
    def run():
        bus = make_bus()
        for tick in range(50):
            bus.begin_tick(tick)
            bus.transmit("PDM", "can3", CanFrame(0x100 + tick % 3, bytes([tick])))
            bus.transmit("BMS", "can4", CanFrame(0x200, bytes([tick, 1])))
            bus.step_bus(tick)
        bus.step_bus(50)
        return bus.log

    log = run()
    assert log == run()
    frames = read_log(log)
    assert write_log(frames) == log
    assert frames[0].timestamp == 0.0 and frames[-1].timestamp == 0.049


@pytest.mark.parametrize("line", ["garbage", "(1.0) can1 100#", "(1.000000) can1 1000#00",
                                  "(1.000000) can1 100#0"])
def test_bad_log_lines(line):
    with pytest.raises(LogFormatError):
        parse_log_line(line)


frames = st.lists(st.tuples(st.sampled_from(["PDM", "AUX"]), st.integers(0, 0x7FF),
                            st.binary(max_size=8)), max_size=30)


@settings(max_examples=200, deadline=None)
@given(frames)
def test_delivery_order_is_total(batch):
    bus = make_bus()
    for sender, fid, data in batch:
        bus.transmit(sender, "can3", CanFrame(fid, data))
    out = bus.step_bus(1).get("can3", [])
    keys = [(d.frame.id, d.sender) for d in out]
    assert keys == sorted(keys)
    assert len(out) == len(batch)
