"""Render all figure analogues from an oracle/estimated trace pair.

    plots --trace-oracle oracle.csv --trace-estimated estimated.csv --out figures/
"""

from __future__ import annotations

import argparse
import sys

from .figures import MissingColumnError, render_all


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--trace-oracle", required=True)
    parser.add_argument("--trace-estimated", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        written = render_all(args.trace_oracle, args.trace_estimated, args.out)
    except MissingColumnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
