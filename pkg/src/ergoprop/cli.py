"""Experiment runner CLI.

    ergoprop --config cfg.json --out results/ [--threads N] [--experiment NAME]

Exit codes: 0 all checks passed, 1 any check failed, 2 configuration error.
ERGOPROP_SEED overrides the master seed for CI fuzzing.
"""

import argparse
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from ._kernels import BACKEND
from .errors import ConfigError, ErgopropError
from .experiments import RUNNERS, _mapper
from .reporting import config_hash, write_json


def load_schema() -> dict:
    with resources.files("ergoprop.schemas").joinpath("config.schema.json").open() as fh:
        return json.load(fh)


def validate_config(config: dict) -> None:
    schema = load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise ConfigError(f"{first.json_path}: {first.message}")


def run(config: dict, out_dir, threads: int = 0) -> dict:
    """Execute the configured experiment; returns the run manifest."""
    validate_config(config)
    experiment = config["experiment"]
    runner = RUNNERS.get(experiment)
    if runner is None:
        raise ConfigError(f"$.experiment: unknown experiment {experiment!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if threads == 0:
        threads = os.cpu_count() or 1
    map_fn, pool = _mapper(threads)
    started = time.monotonic()
    try:
        checks, outputs = runner(config, out_dir, map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    wall = time.monotonic() - started
    manifest = {
        "schema_version": 1,
        "experiment": experiment,
        "config_hash": config_hash(config),
        "tool_version": __version__,
        "backend": BACKEND,
        "threads": threads,
        "wall_time_s": wall,
        "checks": [c.as_json() for c in checks],
        "outputs": outputs,
        "passed": all(c.passed for c in checks),
    }
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ergoprop", description=__doc__)
    parser.add_argument("--config", required=True, help="path to a run config JSON")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker threads; 0 = auto")
    parser.add_argument("--experiment", default=None,
                        help="override the experiment named in the config")
    args = parser.parse_args(argv)

    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.experiment is not None:
        config["experiment"] = args.experiment
    env_seed = os.environ.get("ERGOPROP_SEED")
    if env_seed is not None:
        config.setdefault("seeds", {"master": 0, "count": 1})
        config["seeds"]["master"] = int(env_seed)

    try:
        manifest = run(config, args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ErgopropError as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return 1
    for check in manifest["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: measured={check['measured']} "
              f"target={check['target']}")
    return 0 if manifest["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
