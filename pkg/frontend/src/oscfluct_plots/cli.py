"""plots render --spec FIG.json"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, render
from .schemas import SchemaError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plots")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("render")
    sp.add_argument("--spec", required=True, help="figure-spec JSON path")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec.from_json(args.spec))
    except (SchemaError, FileNotFoundError, KeyError) as exc:
        print(f"plots error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
