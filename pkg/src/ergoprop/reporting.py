"""Deterministic CSV and JSON emission for experiment outputs.

CSV bytes must be identical across reruns and thread counts, so floats are
written with shortest round-trip repr and rows are emitted in a fixed order.
Sidecar manifests carry provenance (model, seeds, estimator, slack, created)
and are the only place timestamps appear.
"""

import hashlib
import json
import time
from pathlib import Path


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, header, rows) -> str:
    """Write rows (iterables of numbers/strings) under a header; returns sha256."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    data = ("\n".join(lines) + "\n").encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def sidecar_manifest(model_desc, seeds_desc, estimator: str, slack=None) -> dict:
    return {
        "model": model_desc,
        "seeds": seeds_desc,
        "estimator": estimator,
        "slack": slack,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def decay_curve_rows(curve):
    """(sep, value, ci_low, ci_high) rows for a DecayCurve or MixingCurve."""
    rows = []
    for p in curve.points:
        rows.append((p[0], p[1], p[2], p[3]))
    return rows


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
