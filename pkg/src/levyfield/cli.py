"""Batch command-line front end.

Subcommands mirror the experiment kinds plus ``validate``.  A run is
configured by a JSON file (--config), optionally overridden field by field
with repeated --set KEY=VALUE flags (values parsed as JSON, falling back to
plain strings).  A manifest written by a previous run is also accepted as a
config file -- its embedded config echo is used, so manifests alone re-run
experiments.

Exit codes: 0 success, 2 validation failure (field-level messages on
stderr and in error.json), 3 resource cap exceeded, 1 anything else.
A machine-readable error record is written to <output-dir>/error.json on
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import KINDS, ExperimentConfig, validate_raw
from .errors import ResourceCapError
from .experiments import ValidationFailure, run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3


def _parse_set(item: str):
    if "=" not in item:
        raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_raw_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        raw = json.load(fh)
    if "config" in raw and isinstance(raw["config"], dict):
        # a manifest: use its embedded config echo
        return raw["config"]
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levyfield",
        description="Stable-noise Ornstein-Uhlenbeck field experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS + ("validate",):
        p = sub.add_parser(kind, help=f"run the {kind} experiment" if kind != "validate"
                           else "validate a config without running anything")
        p.add_argument("--config", help="JSON config file (or a manifest)")
        p.add_argument("--set", action="append", default=[], type=_parse_set,
                       metavar="KEY=VALUE", help="override any config field")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--workers", type=int, help="override the worker count")
        p.add_argument("--output-dir", help="override the output directory")
    return parser


def _assemble_raw(args) -> dict:
    raw = _load_raw_config(args.config)
    if args.command != "validate":
        raw["kind"] = args.command
    for key, value in args.set:
        raw[key] = value
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.output_dir is not None:
        raw["output_dir"] = args.output_dir
    return raw


def _write_error_record(raw: dict, kind: str, messages: list) -> None:
    outdir = Path(raw.get("output_dir") or ".")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "error.json", "w") as fh:
            json.dump({"error": kind, "messages": messages}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError:
        pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = _assemble_raw(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    diags = validate_raw(raw)
    if args.command == "validate":
        if diags:
            for d in diags:
                print(d, file=sys.stderr)
            return EXIT_VALIDATION
        print("ok")
        return EXIT_OK
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        _write_error_record(raw, "validation", diags)
        return EXIT_VALIDATION

    cfg = ExperimentConfig.from_dict(raw)
    try:
        result = run(cfg)
    except ValidationFailure as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        _write_error_record(raw, "validation", exc.diagnostics)
        return EXIT_VALIDATION
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_record(raw, "resource-cap", [str(exc)])
        return EXIT_RESOURCE
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        _write_error_record(raw, type(exc).__name__, [str(exc)])
        return EXIT_ERROR
    for f in result.files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
