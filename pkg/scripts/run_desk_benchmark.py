"""Run the desk-scale exothermic benchmark end to end and print the ranking.

    python3 scripts/run_desk_benchmark.py --out runs/desk --jobs 1
"""

import argparse
import csv
import sys
from pathlib import Path

from rarebench.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "desk_exothermic.yaml"))
    ap.add_argument("--out", default="runs/desk_exothermic")
    ap.add_argument("--jobs", default="1")
    args = ap.parse_args()

    code = cli(["bench", "--config", args.config, "--out", args.out, "--jobs", args.jobs])
    if code:
        sys.exit(code)
    with open(Path(args.out) / "bench" / "ranking.csv") as fh:
        for row in csv.DictReader(fh):
            print("  ".join(f"{k}={v}" for k, v in row.items()))


if __name__ == "__main__":
    main()
