"""CSV and manifest emission with deterministic, byte-stable formatting.

Every CSV an experiment writes gets a sibling ``<name>.manifest.json`` that
echoes the full configuration, the artifact version and the wall time; the
manifest alone is enough to re-run the experiment.  Floats are always
rendered with ``%.17g`` (full round-trip precision), so identical numerical
results give identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

FLOAT_FMT = "%.17g"


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, str)):
        return str(value)
    return FLOAT_FMT % float(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    return rows[0], rows[1:]


def manifest_path(csv_path) -> Path:
    return Path(str(csv_path) + ".manifest.json")


def write_manifest(csv_path, *, config: dict, schema: str, version: str, wall_time_s: float) -> Path:
    payload = {
        "artifact": "levyfield",
        "version": version,
        "schema": schema,
        "config": config,
        "wall_time_s": wall_time_s,
    }
    path = manifest_path(csv_path)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
