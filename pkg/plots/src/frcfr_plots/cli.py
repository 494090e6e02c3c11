"""Command-line wrapper: ``frcfr-plot --kind convergence --in 'runs/*.csv' --out fig.svg``."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotJob, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="frcfr-plot")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="pattern", required=True,
                        help="glob of run CSVs (quote it)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--loglog", action="store_true")
    args = parser.parse_args(argv)
    job = PlotJob(pattern=args.pattern, kind=args.kind, out=args.out,
                  loglog=args.loglog)
    try:
        path = render(job)
    except (FileNotFoundError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
