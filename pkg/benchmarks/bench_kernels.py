"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel in isolation, then a full scenario run per backend
(each in a fresh interpreter so backend selection happens at import).
"""

import argparse
import os
import subprocess
import sys
import timeit
from array import array

from fsevsim import _kernels_py as py
from fsevsim.accumulator import CellSpec, PackConfig, pack_params
from fsevsim.drivetrain import InverterConfig, MotorSpec, inverter_params

try:
    from fsevsim import _kernels as ext
except ImportError:
    ext = None


def kernel_cases(mod):
    ip = inverter_params(MotorSpec(), InverterConfig())
    pp = pack_params(PackConfig(), CellSpec())
    inv = array("d", [25.0] * 32)
    setp = array("d", [21.0] * 4)
    lim = array("d", [20000.0] * 4)
    pk = array("d", [1.0, 0, 600, 25, 0, 0, 0, 0, 0, 0])
    return {
        "inverter_tick": lambda: mod.inverter_tick(inv, setp, lim, 9000.0, 590.0, True, 1e-3, ip),
        "pack_step": lambda: mod.pack_step(pk, 1e-9, 1e-3, pp),
        "current_for_power": lambda: mod.current_for_power(80000.0, 598.0, 0.18),
        "insert_bits": lambda: mod.insert_bits(0, 12, 16, True, 64, 0xBEEF),
        "extract_bits": lambda: mod.extract_bits(0x0123456789ABCDEF, 12, 16, True, 64),
        "vehicle_step": lambda: mod.vehicle_step(20.0, 60.0, 0.0, 1e-3, 300, 0.2, 12.5, 1.2, 1.2,
                                                 100),
    }


def time_kernels(repeat):
    mods = [("python", py)] + ([("compiled", ext)] if ext is not None else [])
    results = {name: {} for name, _ in mods}
    for name, mod in mods:
        for case, fn in kernel_cases(mod).items():
            best = min(timeit.repeat(fn, number=20000, repeat=repeat)) / 20000
            results[name][case] = best
    return results


def time_scenario(pure):
    env = dict(os.environ, FSEVSIM_PURE_PYTHON="1" if pure else "0")
    code = ("import time;from fsevsim import kernels;from fsevsim.harness import run_scenario;"
            "from fsevsim.scenario import shipped_scenarios;s=shipped_scenarios()['baseline_launch'];"
            "t=time.perf_counter();run_scenario(s,record_trace=False,keep_log=False);"
            "print(kernels.BACKEND,time.perf_counter()-t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    res = time_kernels(args.repeat)
    print(f"{'kernel':<20}{'python us':>12}{'compiled us':>14}{'speedup':>10}")
    for case, t_py in res["python"].items():
        t_c = res.get("compiled", {}).get(case)
        if t_c is None:
            print(f"{case:<20}{t_py * 1e6:>12.3f}{'n/a':>14}")
        else:
            print(f"{case:<20}{t_py * 1e6:>12.3f}{t_c * 1e6:>14.3f}{t_py / t_c:>9.1f}x")

    print()
    runs = [time_scenario(pure=True)]
    if ext is not None:
        runs.append(time_scenario(pure=False))
    for backend, secs in runs:
        print(f"baseline_launch (11 s simulated), {backend:<8} backend: {secs:.3f} s wall")
    if len(runs) == 2:
        print(f"end-to-end speedup: {runs[0][1] / runs[1][1]:.2f}x")


if __name__ == "__main__":
    main()
