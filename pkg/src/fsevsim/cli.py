"""Command-line entry point.

Exit codes: 0 clean, 2 rule violations, 1 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

from .accumulator import PACK_VOLTAGE_LIMIT_V, check_segment_rules
from .bus import LogFormatError, read_log
from .codec import CodecError, DecodeError, decode_frame, load_default_db, load_message_db, \
    serialize_message_db
from .config import ConfigError, VehicleConfig, load_config
from .harness import POWER_TOLERANCE, run_scenario
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATION = 2


@dataclass
class LogAudit:
    samples: int = 0
    max_power_w: float = 0.0
    max_power_t: float = 0.0
    max_voltage_v: float = 0.0
    max_voltage_t: float = 0.0
    failures: List[str] = field(default_factory=list)


def audit_log(frames, config: VehicleConfig, db=None) -> LogAudit:
    """Rebuild DC power and pack voltage from the BMS pack frames."""
    db = db if db is not None else load_default_db()
    msg = db["BMS_PACK"]
    cap = config.control.power_cap_w
    out = LogAudit()
    for n, frame in enumerate(frames, start=1):
        if frame.id != msg.frame_id:
            continue
        sig = decode_frame(db, frame)
        v = sig["pack_voltage"]
        power = v * sig["pack_current"]
        out.samples += 1
        if power > out.max_power_w:
            out.max_power_w, out.max_power_t = power, frame.timestamp
        if v > out.max_voltage_v:
            out.max_voltage_v, out.max_voltage_t = v, frame.timestamp
        if power > cap * (1.0 + POWER_TOLERANCE):
            out.failures.append(f"power cap: {power:.1f} W > {cap:.0f} W"
                                f" at t={frame.timestamp:.6f}s (log line {n})")
        if v > PACK_VOLTAGE_LIMIT_V:
            out.failures.append(f"EV4.1.1: pack voltage {v:.2f} V > {PACK_VOLTAGE_LIMIT_V:.0f} V"
                                f" at t={frame.timestamp:.6f}s (log line {n})")
    return out


def _load_config(path: Optional[str]) -> VehicleConfig:
    return load_config(path) if path else VehicleConfig()


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        config = _load_config(args.config)
        if args.seed is not None:
            config = replace(config, sim=replace(config.sim, seed=args.seed))
    except (OSError, ScenarioError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report, _ = run_scenario(scenario, config, out_dir=args.out)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_check_rules(args) -> int:
    try:
        config = _load_config(args.config)
        with open(args.log, encoding="utf-8") as fh:
            frames = read_log(fh)
        audit = audit_log(frames, config)
    except (OSError, ConfigError, LogFormatError, DecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    failures = list(audit.failures)
    for chk in check_segment_rules(config.pack, config.cell).checks:
        print(chk.describe())
        if not chk.passed:
            failures.append(chk.describe())
    cap = config.control.power_cap_w
    if audit.samples == 0:
        print("warning: no data (log holds no BMS pack frames)")
    else:
        print(f"samples {audit.samples}")
        print(f"max DC power {audit.max_power_w:.1f} W at t={audit.max_power_t:.6f}s"
              f" (limit {cap:.0f} W)")
        print(f"max pack voltage {audit.max_voltage_v:.2f} V at t={audit.max_voltage_t:.6f}s"
              f" (limit {PACK_VOLTAGE_LIMIT_V:.0f} V)")
    for line in audit.failures:
        print(f"FAIL {line}")
    print("result: " + ("FAIL" if failures else "PASS"))
    return EXIT_VIOLATION if failures else EXIT_OK


def cmd_db(args) -> int:
    try:
        with open(args.validate, encoding="utf-8") as fh:
            db = load_message_db(fh.read())
    except (OSError, CodecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(serialize_message_db(db))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsevsim", description="Formula Student EV simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("--scenario", required=True)
    run.add_argument("--config")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check-rules", help="audit a bus log against rule limits")
    chk.add_argument("--log", required=True)
    chk.add_argument("--config")
    chk.set_defaults(func=cmd_check_rules)

    db = sub.add_parser("db", help="validate a message database")
    db.add_argument("--validate", required=True, metavar="PATH")
    db.set_defaults(func=cmd_db)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
