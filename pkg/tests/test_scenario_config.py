import pytest

from fsevsim.config import (ConfigError, VehicleConfig, default_config_text, parse_config,
                            serialize_config)
from fsevsim.scenario import (Event, ScenarioError, TraceSampler, format_scenario, parse_event,
                              parse_scenario)

SCN = """\
name: demo
duration: 2.5
trace:
t,pedal,brake_bar,steer_deg
0.0,0.0,0.0,0.0
1.0,1.0,10.0,-20.0
events:
0.0,activate_ts
0.5,sensor_dropout,pedal,0.2
1.0,force_cell_temp,61
"""


def test_parse_scenario():
    sc = parse_scenario(SCN)
    assert sc.name == "demo" and sc.duration == 2.5
    assert sc.trace[1] == (1.0, 1.0, 10.0, -20.0)
    assert sc.events == (Event(0.0, "activate_ts"), Event(0.5, "sensor_dropout", ("apps", 0.2)),
                         Event(1.0, "force_cell_temp", (61.0,)))
    assert parse_scenario(format_scenario(sc)) == sc


@pytest.mark.parametrize("text, fragment", [
    (SCN.replace("1.0,force_cell_temp,61", "1.0,explode"), "unknown event"),
    (SCN.replace("1.0,force_cell_temp,61", "0.1,reset_fault"), "time-sorted"),
    (SCN.replace("1.0,1.0,10.0,-20.0", "-1.0,1,1,1"), "time-sorted"),
    (SCN.replace("pedal,0.2", "gearbox,0.2"), "sensor channel"),
    (SCN.replace("activate_ts", "activate_ts,now"), "argument"),
    (SCN.replace("name: demo\n", ""), "name"),
    (SCN.replace("1.0,1.0,10.0,-20.0", "1.0,1.0"), "trace rows"),
])
def test_scenario_errors(text, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse_scenario(text)


def test_event_line_number():
    with pytest.raises(ScenarioError) as exc:
        parse_event(["x", "activate_ts"], line=12)
    assert exc.value.line == 12


def test_sampler_interpolates_and_holds():
    sample = TraceSampler(((0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 10.0, -20.0), (1.0, 0.5, 0, 0)))
    assert sample(0.25) == pytest.approx((0.25, 2.5, -5.0))
    assert sample(5.0) == (0.5, 0, 0)
    assert sample(-1.0) == (0.0, 0.0, 0.0)
    assert TraceSampler(())(3.0) == (0.0, 0.0, 0.0)


def test_default_config_text_matches_defaults():
    cfg = parse_config(default_config_text())
    assert cfg == VehicleConfig()


def test_config_round_trip():
    cfg = parse_config("control.vectoring_mode = proportional\ninverter.efficiency = 0.95\n")
    assert cfg.control.efficiency == 0.95
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("text, fragment", [
    ("pack.series = 145", "divisible"),
    ("nosection = 1", "no section"),
    ("engine.size = 2", "unknown section"),
    ("pack.colour = red", "unknown key"),
    ("pack.series = many", "bad value"),
    ("pack.series = 144\npack.series = 144", "duplicate"),
    ("vehicle.mass_kg = 0", "positive"),
    ("control.vectoring_mode = sideways", "vectoring"),
    ("safety.precharge_ratio = 1.2", "ratio"),
    ("just words", "expected"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)
