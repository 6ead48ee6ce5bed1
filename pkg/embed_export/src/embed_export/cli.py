"""Command line: export a table, verify one, or build the tiny demo encoder.

Exit codes: 0 success (and verification pass), 1 verification failure,
2 usage or manifest error, 3 model/format/runtime error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .encoder import POOLINGS, make_tiny_encoder
from .errors import ExportError, ManifestError
from .export import export_table, verify_table


def cmd_export(args) -> int:
    count = export_table(args.manifest, args.model, args.pooling, args.out)
    print(f"exported {count} vectors -> {args.out}")
    return 0


def cmd_verify(args) -> int:
    report = verify_table(args.table, args.manifest)
    print(report.render())
    return 0 if report.ok else 1


def cmd_make_model(args) -> int:
    path = make_tiny_encoder(args.out, seed=args.seed, hidden=args.hidden)
    print(f"wrote demo encoder to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-export", description="Item-title embedding table exporter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="embed manifest titles and write a table")
    p.add_argument("--manifest", required=True, help="UTF-8 item_id<TAB>title file")
    p.add_argument("--model", required=True, help="encoder identifier or local directory")
    p.add_argument("--pooling", choices=POOLINGS, default="mean")
    p.add_argument("--out", required=True, help="output table path")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("verify", help="check a table against its manifest")
    p.add_argument("--table", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("make-model", help="materialize a small offline demo encoder")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=16)
    p.set_defaults(func=cmd_make_model)

    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ManifestError as exc:
        print(f"manifest error: {exc}", file=sys.stderr)
        return 2
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
