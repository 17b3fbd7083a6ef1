#!/usr/bin/env python3
"""Plot rate-distortion curves from an experiment CSV.

Groups rows by the `series` column and draws rate against distortion for
each group.  Any CSV produced by `ibrd run` works; columns beyond the two
being plotted are ignored.
"""

import argparse
import csv
import sys
from collections import defaultdict


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path", help="experiment CSV from ibrd run")
    parser.add_argument("--x", default="rate", help="x column (default rate)")
    parser.add_argument(
        "--y", default="distortion", help="y column (default distortion)"
    )
    parser.add_argument("--out", help="write PNG here instead of showing")
    args = parser.parse_args()

    try:
        import matplotlib

        if args.out:
            matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; pip install matplotlib", file=sys.stderr)
        return 1

    series = defaultdict(list)
    with open(args.csv_path, newline="") as f:
        for row in csv.DictReader(f):
            series[row["series"]].append((float(row[args.x]), float(row[args.y])))

    fig, ax = plt.subplots(figsize=(7, 5))
    for name in sorted(series):
        points = sorted(series[name])
        ax.plot([p[0] for p in points], [p[1] for p in points], marker=".", label=name)
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    ax.legend(fontsize="small")
    fig.tight_layout()

    if args.out:
        fig.savefig(args.out, dpi=150)
        print(args.out)
    else:
        plt.show()
    return 0


if __name__ == "__main__":
    sys.exit(main())
