"""Command-line runner: ``boundfire run <config>`` and ``boundfire snapshot <config>``.

Outputs for prefix ``P``: ``P.csv`` (raw estimates), ``P.json`` (fits,
verdicts and the resolved config), ``P.config.yaml`` (the resolved config on
its own) and, for snapshots, ``P.svg``.

Exit codes: 0 success, 1 invalid config, 2 a check failed under ``--assert``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys

from . import experiments
from ._jit import BACKEND
from .config import ConfigError, ExperimentConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSERT = 2


def spec_hash(config: ExperimentConfig) -> str:
    """Digest of what determines the results: experiment, parameters and seed."""
    payload = json.dumps(
        {"experiment": config.experiment, "parameters": config.parameters, "seed": config.seed},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _cell(value) -> str:
    if hasattr(value, "item"):
        value = value.item()
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in header])


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _jsonable(obj.item())
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def run_experiment(config: ExperimentConfig) -> dict:
    """Run ``config`` and write its output files; returns the JSON summary."""
    ctx = {"name": config.experiment, "hash": spec_hash(config)}
    runner = experiments.RUNNERS[config.experiment]
    rows, summary = runner(config.parameters, config.seed, config.threads, ctx)
    prefix = config.output
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_csv(prefix + ".csv", experiments.HEADERS[config.experiment], rows)
    if "run" in ctx:
        from .render import render_snapshot

        render_snapshot(ctx["run"], float(config.parameters["t"]), prefix + ".svg")
    checks = summary.get("checks", [])
    out = {
        "experiment": config.experiment,
        "spec_hash": ctx["hash"],
        "backend": BACKEND,
        "config": config.to_dict(),
        **{k: v for k, v in summary.items() if k != "checks"},
        "checks": checks,
        "pass": all(bool(c.get("pass")) for c in checks),
    }
    with open(prefix + ".json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(out), fh, indent=2, sort_keys=False)
        fh.write("\n")
    with open(prefix + ".config.yaml", "w", encoding="utf-8") as fh:
        fh.write(config.dump())
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boundfire", description="Boundary-driven forest-fire experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--assert", dest="assert_", action="store_true", help="exit 2 if any check fails")
    run.add_argument("--threads", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output path prefix")
    snap = sub.add_parser("snapshot", help="render an SVG snapshot of one run")
    snap.add_argument("config")
    snap.add_argument("--seed", type=int)
    snap.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.command == "snapshot" and config.experiment != "snapshot":
            raise ConfigError("the snapshot command needs experiment: snapshot", None, args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("error: --seed must lie in [0, 2**64)", file=sys.stderr)
            return EXIT_CONFIG
        overrides["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return EXIT_CONFIG
        overrides["threads"] = args.threads
    if args.out:
        overrides["output"] = args.out
    config = dataclasses.replace(config, **overrides)
    summary = run_experiment(config)
    for check in summary["checks"]:
        label = check.get("name") or check.get("relation")
        print(f"{'PASS' if check.get('pass') else 'FAIL'} {config.experiment} {label}")
    print(f"wrote {config.output}.csv {config.output}.json")
    if getattr(args, "assert_", False) and not summary["pass"]:
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
