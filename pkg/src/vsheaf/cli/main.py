"""Command line entry point."""

from __future__ import annotations

import argparse
import sys

from ..charts import CocycleError
from .commands import COMMANDS, run
from .syntax import InputError
from .workspace import ORDERS, Workspace


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vsheaf",
        description="Exact Koszul homology, Gysin maps and virtual structure sheaves "
                    "for workspace files.")
    p.add_argument("--input", required=True, help="workspace file")
    p.add_argument("--cmd", required=True, choices=COMMANDS)
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p.add_argument("--degree-bound", type=int, default=None,
                   help="truncation degree for Hilbert series of infinite-length modules")
    p.add_argument("--order", choices=ORDERS, default=None,
                   help="monomial order for the groebner command")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.input}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        ws = Workspace.parse(text)
        report = run(ws, args.cmd, args.order, args.degree_bound)
    except InputError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return 2
    except CocycleError as exc:
        print(f"FAIL: {exc}")
        return 1
    sys.stdout.write(report.json() if args.json else report.text())
    return 0 if report.ok else 1
