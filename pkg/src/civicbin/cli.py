"""Operator command line: run simulations, seed a live service, replay logs
into metric reports, and serve the central API.

Exit codes: 0 success, 1 runtime error (single-line diagnostic on stderr),
2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .domain import CivicbinError
from .eventlog import EventLog
from .logreader import Metrics, compute_metrics
from .scenario import ScenarioConfig
from .simulator import run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="civicbin",
                                     description="smart-waste simulator and central service")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="simulation commands")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser("run", help="run a scenario to its horizon")
    sim_run.add_argument("scenario", help="path to a .scenario file")
    sim_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim_run.add_argument("--out", default=".", help="directory for the event log and metrics")

    seed = sub.add_parser("seed", help="register a scenario's city in a live service")
    seed.add_argument("service_url", help="base URL, e.g. http://localhost:8000")
    seed.add_argument("scenario", help="path to a .scenario file")

    report = sub.add_parser("report", help="recompute metrics from an event log")
    report.add_argument("event_log", help="path to an events log file")
    report.add_argument("--format", choices=("table", "csv"), default="table")

    serve = sub.add_parser("serve", help="start the central service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--state", default=None, help="directory for event log + snapshots")
    serve.add_argument("--virtual-clock", action="store_true",
                       help="take time from the X-Virtual-Time-Ms request header")
    serve.add_argument("--ui", default=None,
                       help="serve a built console from this directory")
    return parser


def format_table(metrics: Metrics) -> str:
    rows = metrics.as_dict()
    width = max(len(k) for k in rows)
    lines = [f"{k.ljust(width)}  {_fmt(v)}" for k, v in rows.items()]
    return "\n".join(lines)


def format_csv(metrics: Metrics) -> str:
    names = Metrics.field_names()
    values = metrics.as_dict()
    return ",".join(names) + "\n" + ",".join(_fmt(values[n]) for n in names) + "\n"


def _fmt(v) -> str:
    # repr keeps full float precision with a dot separator, locale-independent
    return repr(v) if isinstance(v, float) else str(v)


def cmd_sim_run(args) -> int:
    config = ScenarioConfig.load(args.scenario)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / f"{config.name}.events.log"
    metrics_path = out_dir / f"{config.name}.metrics.json"
    with open(log_path, "w", encoding="utf-8") as sink:
        run = run_scenario(config, log=EventLog(sink=sink))
    metrics_path.write_text(
        json.dumps(run.metrics.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(format_table(run.metrics))
    print(f"log: {log_path}")
    print(f"metrics: {metrics_path}")
    return 0


def cmd_seed(args) -> int:
    import httpx

    config = ScenarioConfig.load(args.scenario)
    d = config.as_dict()
    payload = {
        "thresholds": d["thresholds"],
        "ambient_ref_c": d["ambient_ref_c"],
        "zones": d["zones"],
        "bins": [
            {k: b[k] for k in ("bin_id", "zone_id", "lat", "lon", "depth_cm", "sensor_offset_cm")}
            for b in d["bins"]
        ],
        "stations": [
            {k: s[k] for k in ("station_id", "lat", "lon")} for s in d["stations"]
        ],
        "crews": [
            {"crew_id": c["crew_id"], "smartphone": c["smartphone"]} for c in d["crews"]
        ],
    }
    url = args.service_url.rstrip("/") + "/api/v1/registry"
    try:
        response = httpx.post(url, json=payload, timeout=30.0)
        response.raise_for_status()
    except httpx.HTTPError as exc:
        raise CivicbinError(f"seeding {url} failed: {exc}") from None
    body = response.json()
    print(f"seeded {body['zones']} zones, {body['bins']} bins, "
          f"{body['stations']} stations, {body['crews']} crews (seq {body['seq']})")
    return 0


def cmd_report(args) -> int:
    path = Path(args.event_log)
    if not path.exists():
        raise CivicbinError(f"event log not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        metrics = compute_metrics(fh)
    if args.format == "csv":
        sys.stdout.write(format_csv(metrics))
    else:
        print(format_table(metrics))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    state_dir = os.environ.get("CIVICBIN_STATE") or args.state
    app = create_app(state_dir=state_dir, virtual_clock=args.virtual_clock,
                     static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sim":
            return cmd_sim_run(args)
        if args.command == "seed":
            return cmd_seed(args)
        if args.command == "report":
            return cmd_report(args)
        if args.command == "serve":
            return cmd_serve(args)
    except CivicbinError as exc:
        print(f"civicbin: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"civicbin: error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
