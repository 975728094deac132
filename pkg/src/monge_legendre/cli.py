"""Command-line driver: ``verify``, ``table`` and ``show-config``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .harness import ConfigError

# flag name -> configuration key
_FLAGS = {
    "family": "family",
    "samples": "samples",
    "seed": "seed",
    "branch": "branch",
    "checks": "checks",
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="monge-legendre", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify", "run a verification sweep"),
        ("table", "tabulate r and v on a 2-D grid"),
        ("show-config", "print the resolved configuration"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any configuration key")
        p.add_argument("--family", choices=harness.FAMILIES)
        p.add_argument("--samples")
        p.add_argument("--seed")
        p.add_argument("--branch", choices=("+", "-", "both"))
        p.add_argument("--checks", help="comma-separated subset of " + ",".join(harness.CHECKS))
        if name == "table":
            p.add_argument("--grid", action="append", default=[], metavar="NAME=LO:HI:COUNT", required=True)
            p.add_argument("--fixed", action="append", default=[], metavar="NAME=VALUE")
    return ap


def resolve_config(args) -> harness.SweepConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(harness.parse_key_values(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    for flag, key in _FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            values[key] = val
    return harness.build_config(values)


def _emit(text: str) -> None:
    """Write to stdout; a reader that closes early (``| head``) is not an error."""
    try:
        sys.stdout.write(text)
        sys.stdout.flush()
    except BrokenPipeError:
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "show-config":
            _emit(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")
            return harness.EXIT_PASS
        if args.command == "table":
            grid = harness.GridSpec.parse(args.grid, args.fixed)
            _emit(harness.emit_solution_table(cfg, grid))
            return harness.EXIT_PASS
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return harness.EXIT_CONFIG
    records, status = harness.run_sweep(cfg)
    _emit(harness.format_records(records))
    sys.stderr.write(harness.summarize(records))
    return status


if __name__ == "__main__":
    sys.exit(main())
