import csv
import io
import math
from dataclasses import replace

import pytest

from fsevsim.config import SimConfig, VehicleConfig
from fsevsim.harness import STAGES, Simulation, SimulationError, run_scenario
from fsevsim.safety import DISCHARGE, TS_OFF
from fsevsim.scenario import Event, Scenario, parse_scenario, shipped_scenarios
from fsevsim.vehicle import VehicleParams, vehicle_step

SHIPPED = shipped_scenarios()


def rows(sim):
    return list(csv.DictReader(io.StringIO(sim.trace_csv())))


@pytest.fixture(scope="module")
def runs():
    return {name: run_scenario(sc) for name, sc in SHIPPED.items()}


def test_vehicle_step_examples():
    p = VehicleParams()
    assert vehicle_step(0.0, [0, 0, 0, 0], p, 0.0, 0.001) == (0.0, 0.0)
    v, _ = vehicle_step(0.0, [9.8] * 4, p, 0.0, 1.0)
    assert v == pytest.approx(2450 / 300)
    assert p.motor_rpm(2094.4 * 0.2 / 12.5) == pytest.approx(20000, rel=1e-4)
    assert 20000 * math.pi / 30 * 0.2 / 12.5 == pytest.approx(33.5, abs=0.05)
    # brakes only oppose motion
    assert vehicle_step(0.0, [0] * 4, p, 50.0, 0.001)[0] == 0.0
    assert vehicle_step(1.0, [0] * 4, p, 50.0, 1.0)[0] == 0.0
    with pytest.raises(ValueError):
        vehicle_step(-1.0, [0] * 4, p, 0, 0.001)


def test_idle_scenario(runs):
    report, sim = runs["idle"]
    assert report.energy_wh == 0.0 and report.ts_active_s == 0.0
    assert report.passed and report.final_soc == 1.0


def test_baseline_launch(runs):
    report, _ = runs["baseline_launch"]
    assert 0 < report.peak_dc_power_w <= 80000 * 1.001
    assert report.final_soc < 1.0
    assert report.peak_wheel_torque_nm == pytest.approx(21.0)
    assert report.passed


def test_cell_overtemp_opens_airs(runs):
    report, sim = runs["cell_overtemp"]
    assert report.bms_trips and report.bms_trips[0].startswith("t=5.000000s over-temperature")
    after = [r for r in rows(sim) if float(r["t"]) >= 5.0]
    assert after[0]["ts_state"] == "DISCHARGE"
    # inverters run before the pack in a tick, so torque is gone from the next one
    assert all(float(r[k]) == 0.0 for r in after[1:] for k in ("t_fl", "t_fr", "t_rl", "t_rr"))
    assert report.final_ts_state == "FAULT"


def test_pedal_dropout_keeps_stale_value(runs):
    report, sim = runs["pedal_dropout"]
    trace = {round(float(r["t"]), 3): r for r in rows(sim)}
    # driver lifted to 20% at 2.05 s, the VCU still acts on the frozen full pedal
    assert float(trace[2.3]["pedal"]) == pytest.approx(0.2)
    assert float(trace[2.3]["t_cmd_fl"]) > 0.5 * 21
    assert float(trace[3.0]["t_cmd_fl"]) <= 0.2 * 21 + 1e-9
    assert report.peak_dc_power_w <= 80000 * 1.001


def test_open_loop_event_timing():
    sc = parse_scenario("name: x\nduration: 1.0\nevents:\n0.0,activate_ts\n0.7,open_loop\n")
    sim = Simulation(sc)
    while sim.tick < 700:
        sim.step()
    assert sim.shutdown.state.name == "TS_ACTIVE"
    sim.step()
    assert sim.shutdown.state == DISCHARGE


def test_remove_hvd_while_off():
    sc = Scenario("x", 0.01, (), (Event(0.0, "remove_hvd"),))
    _, sim = run_scenario(sc)
    assert sim.shutdown.state == TS_OFF and not sim.shutdown.hvd_present
    assert sim.shutdown.v_link == 0.0


def test_inject_unknown_event():
    sim = Simulation(Scenario("x", 0.01))
    with pytest.raises(SimulationError):
        sim.inject(Event(0.0, "explode"))


def test_determinism():
    for sc in SHIPPED.values():
        _, a = run_scenario(sc)
        _, b = run_scenario(sc)
        assert a.can_log() == b.can_log()
        assert a.trace_csv() == b.trace_csv()


def test_logger_position_does_not_change_physics(runs):
    order = ("logger",) + tuple(s for s in STAGES if s != "logger")
    for name in ("baseline_launch", "slalom"):
        report, sim = runs[name]
        moved, sim2 = run_scenario(SHIPPED[name], stage_order=order)
        assert sim2.can_log() == sim.can_log()
        assert moved.energy_wh == report.energy_wh and moved.distance_m == report.distance_m
        assert list(sim2.pack) == list(sim.pack)


def test_only_logger_may_move():
    with pytest.raises(SimulationError):
        Simulation(Scenario("x", 0.1), stage_order=tuple(reversed(STAGES)))


def test_speed_and_rpm_bounds(runs):
    for name, (report, sim) in runs.items():
        for r in rows(sim):
            assert float(r["speed_mps"]) >= 0.0
            assert float(r["motor_rpm"]) <= 20000.0
        assert report.max_motor_rpm <= 20000.0


def test_energy_conservation_every_scenario(runs):
    for name, (r, _) in runs.items():
        out = r.mech_work_wh + r.drivetrain_loss_wh + r.ohmic_loss_wh
        if r.stored_energy_drop_wh == 0:
            assert out == 0
            continue
        assert out == pytest.approx(r.stored_energy_drop_wh, rel=5e-3), name
        assert r.drivetrain_loss_wh == pytest.approx(r.energy_wh * 0.1, rel=1e-9)


def test_outputs_written(tmp_path, runs):
    report, _ = run_scenario(SHIPPED["idle"], out_dir=str(tmp_path))
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"can.log", "trace.csv", "report.txt", "summary.csv"}
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header.startswith("t,pedal,brake_bar,steer_deg,ts_state")
    assert "result: PASS" in (tmp_path / "report.txt").read_text()


def test_sensor_noise_is_seeded():
    noisy = VehicleConfig(sim=SimConfig(sensor_noise=0.01))
    sc = SHIPPED["slalom"]
    sc = replace(sc, duration=2.0)
    a = run_scenario(sc, noisy, seed=1)[1].trace_csv()
    b = run_scenario(sc, noisy, seed=1)[1].trace_csv()
    c = run_scenario(sc, noisy, seed=2)[1].trace_csv()
    assert a == b and a != c


def test_config_violation_reported():
    from fsevsim.accumulator import PackConfig
    cfg = VehicleConfig(pack=PackConfig(segment_series=48))
    report, _ = run_scenario(replace(SHIPPED["idle"], duration=0.01), cfg)
    assert not report.passed
    assert {v.rule for v in report.violations} == {"EV5.3.2"}
