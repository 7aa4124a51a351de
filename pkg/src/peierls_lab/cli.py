"""Command line runner: ``peierls-lab CONFIG [--suite NAME ...] [--out DIR] [--seed N] [--list]``.

Exit status 0 when every selected suite passes, 1 when any fails and 2 when
the configuration cannot be read or validated (nothing is written then).
"""
from __future__ import annotations

import argparse
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .suites import REGISTRY, list_suites, run_suite

SCHEMA_VERSION = 1


def suite_seed(master: int, name: str) -> int:
    """Per-suite seed derived from the master seed and the suite name."""
    ss = np.random.SeedSequence([master, zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    return x


def envelope(name: str, result, seconds: float, cfg, seed: int) -> dict:
    return _jsonable({
        "schema_version": SCHEMA_VERSION,
        "suite": name,
        "status": result.status,
        "residuals": result.residuals,
        "failures": result.failures,
        "details": result.details,
        "timings": {"seconds": round(seconds, 3)},
        "config": cfg.echo(),
        "seed": seed,
    })


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peierls-lab", description="Run verification suites from a TOML config.")
    ap.add_argument("config", nargs="?", help="experiment config (TOML)")
    ap.add_argument("--suite", action="append", default=None, metavar="NAME",
                    help="suite to run (repeatable); defaults to the config selection or all suites")
    ap.add_argument("--out", default=None, metavar="DIR", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, default=None, metavar="N", help="master seed (overrides the config)")
    ap.add_argument("--list", action="store_true", help="list suites and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        for name, desc in list_suites():
            print(f"{name:24s} {desc}")
        return 0
    if args.config is None:
        print("error: a config file is required (or use --list)", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, known_suites=REGISTRY)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    names = args.suite or list(cfg.suites) or list(REGISTRY)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        print(f"error: unknown suite(s) {unknown}; see --list", file=sys.stderr)
        return 2
    master = cfg.seed if args.seed is None else args.seed
    out = Path(args.out if args.out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in names:
        seed = suite_seed(master, name)
        result, seconds = run_suite(name, cfg, seed)
        env = envelope(name, result, seconds, cfg, seed)
        (out / f"{name}.json").write_text(json.dumps(env, indent=2, sort_keys=True) + "\n")
        if cfg.export_csv:
            for key, arr in result.arrays.items():
                np.savetxt(out / f"{name}.{key}.csv", np.asarray(arr), delimiter=",")
        print(f"{name:24s} {result.status.upper():4s} {seconds:8.2f}s")
        for f in result.failures:
            print(f"    failed: {f}")
        if result.status != "pass":
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
