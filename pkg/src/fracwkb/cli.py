"""Command line: ``fracwkb {simulate,wkb,rays,sweep,gcc,figures} [--config F] [--set k=v] [--out D]``.

Exit codes: 0 success, 1 usage error, 2 invalid parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import FracWkbError
from .experiments import COMMANDS, DEFAULTS, KINDS, ExperimentSpec, merged_config
from .io import atomic_dir, dumps

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_override(item: str) -> tuple[str, object]:
    """``key=value`` with ``value`` read as JSON when possible, else as a string."""
    if "=" not in item:
        raise UsageError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise UsageError(f"--set has an empty key in {item!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracwkb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="kind", metavar="command", parser_class=_Parser)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", type=Path, help="JSON file with parameters")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable; values parsed as JSON)")
        sp.add_argument("--out", type=Path, default=None, help=f"output directory (default out/{kind})")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for independent tasks")
        sp.add_argument("--dump-config", action="store_true", help="print the merged configuration and exit")
    return p


def load_spec(args) -> ExperimentSpec:
    params = {}
    if args.config is not None:
        try:
            params = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(params, dict):
            raise ValueError("config file must hold a JSON object")
    for item in args.set:
        k, v = parse_override(item)
        params[k] = v
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cfg = merged_config(args.kind, params)
    out = args.out if args.out is not None else Path("out") / args.kind
    return ExperimentSpec(kind=args.kind, parameters=cfg, output_dir=out, seed=int(cfg.get("seed", 0)))


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.kind is None:
            raise UsageError(f"a command is required: {', '.join(KINDS)}")
        spec = load_spec(args)
        if args.dump_config:
            sys.stdout.write(dumps(spec.parameters))
            return EXIT_OK
        with atomic_dir(spec.output_dir) as tmp:
            summary = COMMANDS[spec.kind](spec.parameters, tmp, args.jobs)
        sys.stdout.write(dumps({"kind": spec.kind, "out": str(spec.output_dir), "summary": summary}))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, KeyError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, ArithmeticError, FracWkbError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


__all__ = ["DEFAULTS", "main", "run"]
