"""Byte-stable CSV/JSON output helpers."""

import csv
import json
from pathlib import Path

SIG_DIGITS = 12


def fmt(value) -> str:
    if isinstance(value, (bool, int, str)):
        return str(value)
    return format(float(value), f".{SIG_DIGITS}g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_round(obj), indent=2, sort_keys=True) + "\n")
