import math
import random

import pytest

from fsevsim.safety import (DISCHARGE, FAULT, GREEN, PRECHARGE, RED, TS_ACTIVE, TS_OFF,
                            BspdInputs, BspdState, SafetyConfig, ShutdownInputs, ShutdownState,
                            bspd_evaluate, check_invariants, close_loop, hvd_insert, hvd_remove,
                            open_loop, step_shutdown, tsal_state)

DT = 0.001
CFG = SafetyConfig()


def run_until(s, inputs, pred, limit=20_000):
    for tick in range(1, limit + 1):
        s = step_shutdown(s, inputs, DT)
        if pred(s):
            return s, tick
    raise AssertionError("condition never reached")


def active():
    s = step_shutdown(ShutdownState(), ShutdownInputs(activate=True), DT)
    s, _ = run_until(s, ShutdownInputs(), lambda s: s.state == TS_ACTIVE)
    return step_shutdown(s, ShutdownInputs(), DT)


def test_precharge_timing():
    s = step_shutdown(ShutdownState(), ShutdownInputs(activate=True), DT)
    assert s.state == PRECHARGE and s.precharge_relay and s.air_minus and not s.air_plus
    s, ticks = run_until(s, ShutdownInputs(), lambda s: s.state == TS_ACTIVE)
    expected = 0.135 * math.log(20)
    assert abs((ticks + 1) * DT - expected) <= DT
    assert s.air_plus and not s.precharge_relay
    assert s.v_link >= 0.95 * 600


def test_loop_open_forces_discharge():
    s = open_loop(active())
    s = step_shutdown(s, ShutdownInputs(), DT)
    assert s.state == DISCHARGE and not (s.air_minus or s.air_plus)
    s, ticks = run_until(s, ShutdownInputs(), lambda s: s.v_link < 60)
    assert abs((ticks + 1) * DT - CFG.discharge_tau * math.log(10)) <= 2 * DT
    assert s.state == TS_OFF
    assert (ticks + 1) * DT < CFG.discharge_budget_s


def test_activation_refused_with_open_loop_or_hvd():
    s = step_shutdown(open_loop(ShutdownState()), ShutdownInputs(activate=True), DT)
    assert s.state == TS_OFF
    s = hvd_remove(ShutdownState())
    assert s.state == TS_OFF and not s.hvd_present
    assert step_shutdown(s, ShutdownInputs(activate=True), DT).state == TS_OFF
    s = step_shutdown(close_loop(hvd_insert(s)), ShutdownInputs(activate=True), DT)
    assert s.state == PRECHARGE


def test_hvd_removal_while_active():
    s = hvd_remove(active())
    assert s.state == DISCHARGE and not s.air_plus


def test_bms_fault_latches_until_reset():
    s = step_shutdown(active(), ShutdownInputs(bms_fault=True), DT)
    assert s.state == DISCHARGE and s.fault_latched and s.fault_reason == "bms"
    s, _ = run_until(s, ShutdownInputs(), lambda s: s.state == FAULT)
    assert step_shutdown(s, ShutdownInputs(activate=True), DT).state == FAULT
    assert step_shutdown(s, ShutdownInputs(reset=True, bms_fault=True), DT).state == FAULT
    s = step_shutdown(s, ShutdownInputs(reset=True), DT)
    assert s.state == TS_OFF and not s.fault_latched


@pytest.mark.parametrize("s, colour", [
    (ShutdownState(state=TS_ACTIVE, air_minus=True, air_plus=True, v_link=600), RED),
    (ShutdownState(state=TS_OFF, v_link=0), GREEN),
    (ShutdownState(state=DISCHARGE, v_link=200), RED),
    (ShutdownState(state=DISCHARGE, v_link=59), GREEN),
])
def test_tsal(s, colour):
    assert tsal_state(s) == colour


def hold_bspd(seconds, brake=35.0, current=20.0):
    b = BspdState()
    for _ in range(round(seconds / DT)):
        b = bspd_evaluate(b, BspdInputs(brake, current, 600.0), DT)
    return b


def test_bspd_latch_window():
    assert hold_bspd(0.5).latched
    assert not hold_bspd(0.499).latched
    assert not hold_bspd(0.4).latched
    assert not hold_bspd(2.0, current=1000 / 600).latched
    assert not hold_bspd(2.0, brake=25.0).latched


def test_bspd_release_resets_timer():
    b = hold_bspd(0.4)
    b = bspd_evaluate(b, BspdInputs(0.0, 20.0, 600.0), DT)
    assert b.timer_s == 0.0


def test_bspd_latch_blocks_activation():
    s = step_shutdown(active(), ShutdownInputs(bspd_latched=True), DT)
    assert s.bspd_latched and s.state == DISCHARGE
    for _ in range(6000):
        s = step_shutdown(s, ShutdownInputs(activate=True), DT)
        assert s.state not in (PRECHARGE, TS_ACTIVE)
    assert s.state == FAULT
    s = step_shutdown(s, ShutdownInputs(reset=True), DT)
    assert s.state == TS_OFF and not s.bspd_latched


def test_random_walk_invariants():
    rng = random.Random(7)
    s = ShutdownState()
    for _ in range(20_000):
        s, pack = random_step(rng, s)
        assert check_invariants(s, pack) == []


def random_step(rng, s):
    r = rng.random()
    if r < 0.002:
        s = open_loop(s)
    elif r < 0.004:
        s = close_loop(s)
    elif r < 0.005:
        s = hvd_remove(s)
    elif r < 0.006:
        s = hvd_insert(s)
    pack = rng.uniform(432, 600)
    inputs = ShutdownInputs(pack_voltage=pack, activate=rng.random() < 0.01,
                            reset=rng.random() < 0.005, bms_fault=rng.random() < 0.001,
                            bspd_latched=rng.random() < 0.001)
    return step_shutdown(s, inputs, DT), pack
