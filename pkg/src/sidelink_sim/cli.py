"""Batch entry point: distance sweeps to CSV, measurement-table verification,
MCS threshold calibration, and the live control service.

The environment variable SIDELINK_SIM_SEED overrides the configured seed for
every subcommand.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from sidelink_sim import chanmodel as cm
from sidelink_sim.calibrate import calibrate_thresholds
from sidelink_sim.control import DEFAULT_PORT, ControlEngine, ControlServer
from sidelink_sim.linkadapt import LinkType, McsTable
from sidelink_sim.simcore import World, WorldConfig, sweep_distance

SWEEP_COLUMNS = [
    "position_cm",
    "dl_mean_db", "dl_std_db", "dl_ci95_db", "dl_min_db", "dl_max_db",
    "sl_mean_db", "sl_std_db", "sl_ci95_db", "sl_min_db", "sl_max_db",
    "dl_maxtput_bps", "sl_maxtput_bps",
    "selected_mode",
]


def _seed_override(config: WorldConfig) -> WorldConfig:
    env = os.environ.get("SIDELINK_SIM_SEED")
    if env is not None:
        config.seed = int(env)
    return config


def _parse_positions(spec: str) -> list[float]:
    """a:b:step, inclusive of both ends when step lands on b."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("positions must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("step must be positive")
    out = []
    pos = start
    while pos <= stop + 1e-9:
        out.append(round(pos, 6))
        pos += step
    return out


def _fmt_db(value) -> str:
    return "" if value is None else f"{value:.4f}"


def write_sweep_csv(points, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SWEEP_COLUMNS)
        for p in points:
            dl, sl = p.dl_stats, p.sl_stats
            row = [f"{p.position_cm:g}"]
            for stats in (dl, sl):
                if stats is None:
                    row += [""] * 5
                else:
                    row += [
                        _fmt_db(stats.mean_db), _fmt_db(stats.std_db),
                        _fmt_db(stats.ci95_db), _fmt_db(stats.min_db),
                        _fmt_db(stats.max_db),
                    ]
            row.append("" if p.dl_maxtput is None else str(p.dl_maxtput.throughput_bps))
            row.append("" if p.sl_maxtput is None else str(p.sl_maxtput.throughput_bps))
            row.append(p.selected.value)
            w.writerow(row)


def read_sweep_csv(path) -> list[dict]:
    """Round-trip reader for the sweep CSV; empty cells come back as None."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise ValueError(f"unexpected sweep columns {reader.fieldnames}")
        rows = []
        for raw in reader:
            row = {}
            for key, cell in raw.items():
                if key == "selected_mode":
                    row[key] = cell
                elif cell == "":
                    row[key] = None
                elif key.endswith("_bps"):
                    row[key] = int(cell)
                else:
                    row[key] = float(cell)
            rows.append(row)
    return rows


def _load_config(path) -> WorldConfig:
    if path is None:
        return _seed_override(WorldConfig())
    return _seed_override(WorldConfig.from_json(path))


def cmd_sweep(args) -> int:
    try:
        config = _load_config(args.config)
        positions = _parse_positions(args.positions)
    except (ValueError, TypeError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    table = McsTable.from_json(args.mcs_table) if args.mcs_table else None
    points = sweep_distance(config, positions, table=table)
    write_sweep_csv(points, args.out)
    print(f"wrote {len(points)} positions to {args.out}")
    return 0


def cmd_verify_tables(args) -> int:
    failures = 0
    for (link_name, gain), _ in cm.EMBEDDED_TABLES.items():
        link = LinkType(link_name)
        table = cm.load_embedded_table(link, gain)
        problems = table.validate()
        n = len(table.rows)
        if problems:
            failures += len(problems)
            print(f"FAIL {link_name} {gain} dB ({n} rows):")
            for p in problems:
                print(f"  {p}")
        else:
            print(f"PASS {link_name} {gain} dB ({n} rows)")
    return 1 if failures else 0


def cmd_calibrate(args) -> int:
    def progress(index, threshold):
        print(f"mcs {index:2d}: threshold {threshold:.4f} dB", flush=True)

    result = calibrate_thresholds(trials=args.trials, seed=args.seed, progress=progress)
    result.table.to_json(args.out)
    if result.flagged:
        print(f"flagged (bisection did not converge): {list(result.flagged)}")
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    try:
        config = _load_config(args.config)
        world = World(config)
    except (ValueError, TypeError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    engine = ControlEngine(
        world, telemetry_interval=args.interval, journal_path=args.journal
    )
    try:
        server = ControlServer(engine, host=args.host, port=args.port)
    except OSError as e:
        print(f"error: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return 2
    host, port = server.address[:2]
    print(f"listening on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidelink-sim",
        description="Desk-scale sidelink relay simulator: sweeps, table checks, "
        "calibration, and the live control service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="SNR/throughput/mode sweep over remote positions")
    p.add_argument("config", nargs="?", default=None, help="scenario config JSON")
    p.add_argument("--positions", default="120:280:20", help="start:stop:step in cm")
    p.add_argument("--out", default="sweep.csv", help="output CSV path")
    p.add_argument("--mcs-table", default=None, help="MCS table JSON (default: shipped)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-tables", help="check embedded measurement tables")
    p.set_defaults(func=cmd_verify_tables)

    p = sub.add_parser("calibrate", help="calibrate MCS SNR thresholds (bit-true)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=int(os.environ.get("SIDELINK_SIM_SEED", 20260824)))
    p.add_argument("--out", default="mcs_table.json")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("serve", help="run the simulation behind the control service")
    p.add_argument("config", nargs="?", default=None, help="scenario config JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--interval", type=int, default=100, help="telemetry interval in subframes")
    p.add_argument("--journal", default="session_journal.ndjson")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
