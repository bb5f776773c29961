import os
import subprocess
import sys
from array import array

import pytest
from hypothesis import given, settings, strategies as st

from fsevsim import _kernels_py as py
from fsevsim import kernels

try:
    from fsevsim import _kernels as ext
except ImportError:  # pragma: no cover - extension not built
    ext = None

needs_ext = pytest.mark.skipif(ext is None, reason="compiled extension not built")
fin = st.floats(-1e4, 1e4, allow_nan=False)


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")
    if ext is not None and os.environ.get("FSEVSIM_PURE_PYTHON") != "1":
        assert kernels.BACKEND == "compiled"


@needs_ext
@settings(max_examples=300, deadline=None)
@given(st.integers(0, 63), st.integers(1, 64), st.booleans(), st.integers(0, 2**64 - 1),
       st.integers(0, 2**64 - 1))
def test_bit_ops_match(start, length, be, payload, raw):
    if start + length > 64:
        return
    raw &= (1 << length) - 1
    assert ext.insert_bits(payload, start, length, be, 64, raw) == \
        py.insert_bits(payload, start, length, be, 64, raw)
    assert ext.extract_bits(payload, start, length, be, 64) == \
        py.extract_bits(payload, start, length, be, 64)


@needs_ext
@settings(max_examples=300, deadline=None)
@given(st.floats(0, 25000), st.floats(0, 700), st.floats(0, 1), st.floats(0, 3e5),
       st.floats(0, 1000))
def test_scalar_kernels_match(n, v, soc, p, ocv):
    args = (n, v, 21.0, 35000.0, 600.0, 20000.0)
    assert ext.envelope_torque(*args) == py.envelope_torque(*args)
    assert ext.ocv_cell(soc, 3.0, 600 / 144) == py.ocv_cell(soc, 3.0, 600 / 144)
    assert ext.stored_energy_wh(soc, 11, 144, 3.0, 600 / 144) == \
        py.stored_energy_wh(soc, 11, 144, 3.0, 600 / 144)
    assert ext.current_for_power(p, ocv + 1, 0.18) == py.current_for_power(p, ocv + 1, 0.18)
    assert ext.thermal_factor(v / 7, n / 200, 100, 110, 15) == \
        py.thermal_factor(v / 7, n / 200, 100, 110, 15)
    assert ext.vehicle_step(soc * 30, p / 1e4, v / 10, 1e-3, 300, 0.2, 12.5, 1.2, 1.2, 100) == \
        py.vehicle_step(soc * 30, p / 1e4, v / 10, 1e-3, 300, 0.2, 12.5, 1.2, 1.2, 100)
    assert ext.rc_step(v, 600.0, 1e-3, 0.135) == py.rc_step(v, 600.0, 1e-3, 0.135)


@needs_ext
@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 25), st.floats(0, 40000), st.floats(0, 21000),
                          st.floats(0, 650), st.booleans()), min_size=1, max_size=40))
def test_stateful_kernels_match(steps):
    from fsevsim.accumulator import CellSpec, PackConfig, pack_params
    from fsevsim.drivetrain import InverterConfig, MotorSpec, inverter_params
    ip = inverter_params(MotorSpec(), InverterConfig())
    pp = pack_params(PackConfig(), CellSpec())
    inv_a = array("d", [25.0] * 32)
    inv_b = array("d", inv_a)
    pk_a = array("d", [1.0, 0, 600, 25, 0, 0, 0, 0, 0, 0])
    pk_b = array("d", pk_a)
    for sp, plim, rpm, vdc, hv in steps:
        setp = array("d", [sp] * 4)
        lim = array("d", [plim] * 4)
        ta = ext.inverter_tick(inv_a, setp, lim, rpm, vdc, hv, 1e-3, ip)
        tb = py.inverter_tick(inv_b, setp, lim, rpm, vdc, hv, 1e-3, ip)
        assert ta == tb
        ext.pack_step(pk_a, ta / 600, 1e-3, pp)
        py.pack_step(pk_b, tb / 600, 1e-3, pp)
    assert list(inv_a) == list(inv_b)
    assert list(pk_a) == list(pk_b)


def _run_digest(pure):
    env = dict(os.environ)
    env["FSEVSIM_PURE_PYTHON"] = "1" if pure else "0"
    code = (
        "import hashlib;from fsevsim import kernels;"
        "from fsevsim.harness import run_scenario;from fsevsim.scenario import shipped_scenarios;"
        "s=shipped_scenarios();h=hashlib.sha256()\n"
        "for n in ('baseline_launch','slalom','bspd_trip'):\n"
        "  r,sim=run_scenario(s[n]);h.update(sim.can_log().encode());h.update(sim.trace_csv().encode())\n"
        "print(kernels.BACKEND, h.hexdigest())")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return out.stdout.split()


@needs_ext
def test_whole_run_identical_across_backends():
    fast = _run_digest(False)
    slow = _run_digest(True)
    assert fast[0] == "compiled" and slow[0] == "python"
    assert fast[1] == slow[1]
